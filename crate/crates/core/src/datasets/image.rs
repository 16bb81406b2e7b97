use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::idx::{load_idx_images, load_idx_labels, IMAGE_PIXELS, IMAGE_SIDE};
use crate::error::{Error, Result};

pub const SMALL_SIDE: usize = 7;
pub const SMALL_PIXELS: usize = SMALL_SIDE * SMALL_SIDE;
const BLOCK: usize = IMAGE_SIDE / SMALL_SIDE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn file_prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetName {
    Mnist,
    Fashion,
    Kmnist,
}

/// Downsampled 7x7 images as pixel indices, with digit labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDataset {
    pub images: Vec<[u8; SMALL_PIXELS]>,
    pub labels: Vec<u8>,
    pub split: Split,
    pub name: DatasetName,
}

impl ImageDataset {
    pub fn new(images: Vec<[u8; SMALL_PIXELS]>, labels: Vec<u8>, split: Split, name: DatasetName) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Input(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 9) {
            return Err(Error::Range(format!("label {l} is not a class in 0..=9")));
        }
        Ok(Self { images, labels, split, name })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Keeps the first `n` examples.
    pub fn truncate(&mut self, n: usize) {
        self.images.truncate(n);
        self.labels.truncate(n);
    }
}

/// 4x4 block means, rounded half away from zero.
pub fn downsample_7x7(image: &[u8]) -> Result<[u8; SMALL_PIXELS]> {
    if image.len() != IMAGE_PIXELS {
        return Err(Error::Input(format!("expected 784 pixels, got {}", image.len())));
    }
    let mut out = [0u8; SMALL_PIXELS];
    for (by, row) in out.chunks_exact_mut(SMALL_SIDE).enumerate() {
        for (bx, px) in row.iter_mut().enumerate() {
            let mut sum = 0u32;
            for y in by * BLOCK..(by + 1) * BLOCK {
                for x in bx * BLOCK..(bx + 1) * BLOCK {
                    sum += image[y * IMAGE_SIDE + x] as u32;
                }
            }
            let n = (BLOCK * BLOCK) as u32;
            *px = ((sum + n / 2) / n) as u8;
        }
    }
    Ok(out)
}

/// Pixel intensities scaled into [0, 1], the input of real-valued networks.
pub fn real_input_view(img: &[u8]) -> Vec<f64> {
    img.iter().map(|&p| p as f64 / 255.0).collect()
}

fn find_file(dir: &Path, stem: &str) -> Result<PathBuf> {
    for candidate in [dir.join(stem), dir.join(format!("{stem}.gz"))] {
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(Error::io(
        dir.join(stem),
        std::io::Error::new(std::io::ErrorKind::NotFound, "IDX file not found (also tried .gz)"),
    ))
}

/// Loads one split from a directory holding the standard IDX file names
/// and downsamples every image to 7x7.
pub fn load_image_dataset(dir: impl AsRef<Path>, split: Split, name: DatasetName) -> Result<ImageDataset> {
    let dir = dir.as_ref();
    let prefix = split.file_prefix();
    let images = load_idx_images(find_file(dir, &format!("{prefix}-images-idx3-ubyte"))?)?;
    let labels = load_idx_labels(find_file(dir, &format!("{prefix}-labels-idx1-ubyte"))?)?;
    let small = images.iter().map(|img| downsample_7x7(img)).collect::<Result<_>>()?;
    ImageDataset::new(small, labels, split, name)
}
