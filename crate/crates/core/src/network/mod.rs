//! Complex and real MLPs, inference backends and post-training quantization.

mod checkpoint;
mod forward;
mod ptq;
mod scalar;
mod spec;
mod state;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use forward::{argmax, layer_forward, network_forward, Backend, NetworkInput, QuantizedNetwork};
pub(crate) use forward::{complex_input, real_input};
pub use ptq::{ptq_calibrate, AffineQuant, PtqCalibration, PtqNetwork, SCALE_FLOOR};
pub use scalar::Scalar;
pub use spec::{Activation, NetworkSpec, ValueKind, PIXEL_VOCABULARY};
pub use state::{embed, Embedding, Layer, NetworkState, Params};
