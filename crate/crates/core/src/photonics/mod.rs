//! Simulation of the I/Q photoelectric multiplier and its alternatives.
//!
//! All optics are modelled on complex envelopes at a symbolic carrier
//! frequency (homodyne detection), so the carrier never appears explicitly.

mod engines;
mod mixer;
mod noise;

pub use engines::{
    amplitude_inner_product, engine_resources, four_engine_product, iq_inner_product,
    roll_pairs, rolled_real_inner_product, two_mixer_product, EngineDesign, EngineResources,
    OPTICAL_GAIN,
};
pub(crate) use engines::{amplitude_charge, iq_charges};
pub use mixer::{mixer_photocurrents, MixerConfig, PhaseShift, Phasor, Photocurrents};
pub use noise::{
    apply_noise, apply_noise_complex, noise_sigma, population_std, snr_linear, NoiseModel,
    NoiseSource, NoisyReadout,
};
