pub mod datasets;
pub mod energy;
pub mod error;
pub mod harness;
pub mod network;
pub mod photonics;
pub mod quant;
pub mod training;

pub use error::{Error, Result};
