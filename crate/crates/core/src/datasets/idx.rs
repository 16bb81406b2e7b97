//! Big-endian IDX files, optionally gzip-compressed.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const IMAGE_SIDE: usize = 28;
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;

/// Reads a whole file, transparently inflating gzip content.
pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let mut raw = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut raw))
        .map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn format_err(path: &Path, offset: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset: offset as u64,
        message: message.into(),
    }
}

fn header(bytes: &[u8], path: &Path, magic: u32, ndims: usize) -> Result<Vec<usize>> {
    let need = 4 + 4 * ndims;
    if bytes.len() < need {
        return Err(format_err(
            path,
            bytes.len(),
            format!("header needs {need} bytes, file has {}", bytes.len()),
        ));
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    if word(0) != magic {
        return Err(format_err(
            path,
            0,
            format!("magic 0x{:08x}, expected 0x{magic:08x}", word(0)),
        ));
    }
    Ok((1..=ndims).map(|i| word(i) as usize).collect())
}

fn body<'a>(bytes: &'a [u8], path: &Path, start: usize, len: usize) -> Result<&'a [u8]> {
    let actual = bytes.len() - start;
    if actual != len {
        return Err(format_err(
            path,
            bytes.len().min(start + len),
            format!("expected {len} data bytes after the header, found {actual}"),
        ));
    }
    Ok(&bytes[start..])
}

/// Parses a 28x28 image file into one flat row-major buffer per image.
pub fn parse_images(bytes: &[u8], path: &Path) -> Result<Vec<Vec<u8>>> {
    let dims = header(bytes, path, IMAGE_MAGIC, 3)?;
    if dims[1] != IMAGE_SIDE || dims[2] != IMAGE_SIDE {
        return Err(format_err(
            path,
            8,
            format!("images are {}x{}, expected 28x28", dims[1], dims[2]),
        ));
    }
    let data = body(bytes, path, 16, dims[0] * IMAGE_PIXELS)?;
    Ok(data.chunks_exact(IMAGE_PIXELS).map(<[u8]>::to_vec).collect())
}

/// Parses a label file; every label must be a digit class 0..=9.
pub fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let dims = header(bytes, path, LABEL_MAGIC, 1)?;
    let data = body(bytes, path, 8, dims[0])?;
    if let Some(i) = data.iter().position(|&l| l > 9) {
        return Err(Error::Range(format!(
            "{}: label {} at byte {} is not a class in 0..=9",
            path.display(),
            data[i],
            8 + i
        )));
    }
    Ok(data.to_vec())
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Vec<Vec<u8>>> {
    let path = path.as_ref();
    parse_images(&read_bytes(path)?, path)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    parse_labels(&read_bytes(path)?, path)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let gz = path.extension().is_some_and(|e| e == "gz");
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let res = if gz {
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(bytes).and_then(|_| enc.finish().map(drop))
    } else {
        let mut f = file;
        f.write_all(bytes)
    };
    res.map_err(|e| Error::io(path, e))
}

pub fn encode_images(images: &[Vec<u8>]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + images.len() * IMAGE_PIXELS);
    for w in [IMAGE_MAGIC, images.len() as u32, IMAGE_SIDE as u32, IMAGE_SIDE as u32] {
        out.extend_from_slice(&w.to_be_bytes());
    }
    for img in images {
        if img.len() != IMAGE_PIXELS {
            return Err(Error::Input(format!("image has {} pixels, expected 784", img.len())));
        }
        out.extend_from_slice(img);
    }
    Ok(out)
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Writes an image file; a `.gz` extension selects gzip.
pub fn write_idx_images(path: impl AsRef<Path>, images: &[Vec<u8>]) -> Result<()> {
    write_bytes(path.as_ref(), &encode_images(images)?)
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    write_bytes(path.as_ref(), &encode_labels(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem.idx")
    }

    #[test]
    fn truncated_image_file_names_lengths() {
        let mut bytes = encode_images(&[vec![7; IMAGE_PIXELS], vec![9; IMAGE_PIXELS]]).unwrap();
        bytes.truncate(bytes.len() - 10);
        let err = parse_images(&bytes, p()).unwrap_err();
        let msg = err.to_string();
        assert_eq!(err.kind(), "format");
        assert!(msg.contains("1568") && msg.contains("1558"), "{msg}");
    }

    #[test]
    fn bad_magic_and_dimensions() {
        let mut bytes = encode_images(&[vec![0; IMAGE_PIXELS]]).unwrap();
        bytes[3] = 0x01;
        assert!(matches!(parse_images(&bytes, p()), Err(Error::Format { offset: 0, .. })));
        let mut bytes = encode_images(&[vec![0; IMAGE_PIXELS]]).unwrap();
        bytes[11] = 27;
        assert!(matches!(parse_images(&bytes, p()), Err(Error::Format { offset: 8, .. })));
        assert!(matches!(parse_images(&[0, 0], p()), Err(Error::Format { .. })));
    }

    #[test]
    fn label_ten_is_a_range_error() {
        let bytes = encode_labels(&[1, 10, 3]);
        assert_eq!(parse_labels(&bytes, p()).unwrap_err().kind(), "range");
    }

    #[test]
    fn gz_and_plain_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let images: Vec<Vec<u8>> = (0..3u8).map(|k| (0..IMAGE_PIXELS).map(|i| (i as u8).wrapping_mul(k)).collect()).collect();
        let labels = vec![0, 9, 4];
        for name in ["a.idx", "a.idx.gz"] {
            let ip = dir.path().join(format!("img-{name}"));
            let lp = dir.path().join(format!("lab-{name}"));
            write_idx_images(&ip, &images).unwrap();
            write_idx_labels(&lp, &labels).unwrap();
            assert_eq!(load_idx_images(&ip).unwrap(), images);
            assert_eq!(load_idx_labels(&lp).unwrap(), labels);
        }
    }
}
