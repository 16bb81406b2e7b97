//! Image and RF datasets.

mod idx;
mod image;
mod rf;

pub use idx::{
    encode_images, encode_labels, load_idx_images, load_idx_labels, parse_images, parse_labels,
    read_bytes, write_idx_images, write_idx_labels, IMAGE_MAGIC, IMAGE_PIXELS, IMAGE_SIDE, LABEL_MAGIC,
};
pub use image::{
    downsample_7x7, load_image_dataset, real_input_view, DatasetName, ImageDataset, Split, SMALL_PIXELS,
    SMALL_SIDE,
};
pub use rf::{
    generate_rf_dataset, read_rf_csv, rf_features, write_rf_csv, Modulation, RfDataset, CATALOG,
    DEFAULT_SEQUENCE_LEN,
};
