//! Inference with a pluggable multiplication backend.

use num_complex::Complex64;

use super::scalar::Scalar;
use super::spec::ValueKind;
use super::state::{Layer, NetworkState, Params};
use crate::datasets::real_input_view;
use crate::error::{Error, Result};
use crate::photonics::{NoiseModel, NoiseSource};
use crate::quant::{Constellation, Constellation1D};

/// How matrix-vector products are evaluated.
#[derive(Debug, Clone)]
pub enum Backend {
    /// Exact floating-point arithmetic.
    Digital,
    /// Row-by-row I/Q photoelectric multiplication (complex networks).
    Iq(NoiseSource),
    /// Single-axis amplitude multiplication (real networks).
    Amplitude(NoiseSource),
}

impl Backend {
    /// The analog backend matching `kind`.
    pub fn simulated(kind: ValueKind, noise: NoiseModel) -> Self {
        match kind {
            ValueKind::Complex => Backend::Iq(noise.source()),
            ValueKind::Real => Backend::Amplitude(noise.source()),
        }
    }

    pub(crate) fn check_kind(&self, kind: ValueKind) -> Result<()> {
        match (self, kind) {
            (Backend::Digital, _)
            | (Backend::Iq(_), ValueKind::Complex)
            | (Backend::Amplitude(_), ValueKind::Real) => Ok(()),
            (b, k) => Err(Error::Config(format!(
                "{} backend cannot evaluate a {k:?} network",
                b.name()
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Digital => "digital",
            Backend::Iq(_) => "iq",
            Backend::Amplitude(_) => "amplitude",
        }
    }

    fn noise(&mut self) -> Option<&mut NoiseSource> {
        match self {
            Backend::Digital => None,
            Backend::Iq(n) | Backend::Amplitude(n) => Some(n),
        }
    }
}

/// Network input: pixel indices (embedded or scaled to [0, 1]) or raw values.
#[derive(Debug, Clone, Copy)]
pub enum NetworkInput<'a> {
    Pixels(&'a [u8]),
    Real(&'a [f64]),
    Complex(&'a [Complex64]),
}

impl NetworkInput<'_> {
    fn len(&self) -> usize {
        match self {
            NetworkInput::Pixels(v) => v.len(),
            NetworkInput::Real(v) => v.len(),
            NetworkInput::Complex(v) => v.len(),
        }
    }
}

/// `W . conj(x)` for every row, with readout noise in the analog backends.
/// The layer and `x` are used as given (already quantized if required).
pub(crate) fn readout<T: Scalar>(layer: &Layer<T>, x: &[T], backend: &mut Backend) -> Result<Vec<T>> {
    debug_assert_eq!(x.len(), layer.inputs);
    match backend.noise() {
        None => Ok((0..layer.outputs)
            .map(|k| {
                layer
                    .row(k)
                    .iter()
                    .zip(x)
                    .fold(T::ZERO, |acc, (&w, &v)| acc + w * v.conj())
            })
            .collect()),
        Some(noise) => {
            let clean: Vec<T> = (0..layer.outputs)
                .map(|k| T::engine_dot(layer.row(k), x))
                .collect();
            if noise.is_noiseless() {
                Ok(clean)
            } else {
                T::add_readout_noise(&clean, noise)
            }
        }
    }
}

pub(crate) fn relu_axes<T: Scalar>(z: T) -> T {
    z.map_axes(|v| v.max(0.0))
}

fn quantize_vec<T: Scalar>(x: &[T], axis: Option<&Constellation1D>) -> Vec<T> {
    match axis {
        Some(a) => x.iter().map(|v| v.map_axes(|u| a.quantize(u))).collect(),
        None => x.to_vec(),
    }
}

/// Pre-activation `Q(W) Q(x)* + Q(b)` of a layer whose parameters are
/// already quantized.
fn preactivation<T: Scalar>(
    layer: &Layer<T>,
    x: &[T],
    axis: Option<&Constellation1D>,
    backend: &mut Backend,
) -> Result<Vec<T>> {
    if x.len() != layer.inputs {
        return Err(Error::Input(format!(
            "layer expects {} inputs, got {}",
            layer.inputs,
            x.len()
        )));
    }
    let qx = quantize_vec(x, axis);
    let mut z = readout(layer, &qx, backend)?;
    for (zk, &bk) in z.iter_mut().zip(&layer.biases) {
        *zk += bk;
    }
    Ok(z)
}

/// One hidden layer: `f(Q(W) Q(x)* + Q(b))` with `f` a per-axis ReLU
/// (split-ReLU for complex values).
pub fn layer_forward<T: Scalar>(
    layer: &Layer<T>,
    x: &[T],
    backend: &mut Backend,
    quant: Option<&Constellation1D>,
) -> Result<Vec<T>> {
    let kind = if T::AXES == 2 {
        ValueKind::Complex
    } else {
        ValueKind::Real
    };
    backend.check_kind(kind)?;
    let layer = match quant {
        Some(a) => layer.quantized(a),
        None => layer.clone(),
    };
    Ok(preactivation(&layer, x, quant, backend)?
        .into_iter()
        .map(relu_axes)
        .collect())
}

fn forward_layers<T: Scalar>(
    layers: &[Layer<T>],
    input: Vec<T>,
    axis: Option<&Constellation1D>,
    backend: &mut Backend,
) -> Result<Vec<f64>> {
    let mut a = input;
    let last = layers.len() - 1;
    for (i, layer) in layers.iter().enumerate() {
        let z = preactivation(layer, &a, axis, backend)?;
        if i == last {
            return Ok(z.into_iter().map(Scalar::logit).collect());
        }
        a = z.into_iter().map(relu_axes).collect();
    }
    unreachable!("networks have at least one layer")
}

/// First-layer input of a complex network.
pub(crate) fn complex_input(state: &NetworkState, input: NetworkInput) -> Result<Vec<Complex64>> {
    check_input_len(state, &input)?;
    match input {
        NetworkInput::Pixels(px) => {
            let table = state.embedding.as_ref().ok_or_else(|| {
                Error::Config("pixel input needs a network with an embedding".into())
            })?;
            px.iter().map(|&p| table.lookup(p as usize)).collect()
        }
        NetworkInput::Complex(v) => Ok(v.to_vec()),
        NetworkInput::Real(v) => Ok(v.iter().map(|&r| Complex64::new(r, 0.0)).collect()),
    }
}

/// First-layer input of a real network.
pub(crate) fn real_input(state: &NetworkState, input: NetworkInput) -> Result<Vec<f64>> {
    check_input_len(state, &input)?;
    match input {
        NetworkInput::Pixels(px) => Ok(real_input_view(px)),
        NetworkInput::Real(v) => Ok(v.to_vec()),
        NetworkInput::Complex(_) => Err(Error::Config(
            "complex input cannot feed a real network".into(),
        )),
    }
}

fn check_input_len(state: &NetworkState, input: &NetworkInput) -> Result<()> {
    let expected = state.spec.input_size();
    if input.len() != expected {
        return Err(Error::Input(format!(
            "network expects {expected} inputs, got {}",
            input.len()
        )));
    }
    Ok(())
}

/// A network with its quantized view precomputed, ready for repeated
/// inference.
#[derive(Debug, Clone)]
pub struct QuantizedNetwork {
    view: NetworkState,
    axis: Option<Constellation1D>,
}

impl QuantizedNetwork {
    pub fn new(state: &NetworkState, quant: &Constellation) -> Result<Self> {
        Ok(Self {
            view: state.quantized(quant)?,
            axis: quant.axis(),
        })
    }

    pub fn state(&self) -> &NetworkState {
        &self.view
    }

    /// Real logits, one per class: the modulus of each complex output, or
    /// the real output itself.
    pub fn logits(&self, input: NetworkInput, backend: &mut Backend) -> Result<Vec<f64>> {
        backend.check_kind(self.view.spec.value_kind)?;
        let axis = self.axis.as_ref();
        match &self.view.params {
            Params::Complex(layers) => {
                let a0 = complex_input(&self.view, input)?;
                forward_layers(layers, a0, axis, backend)
            }
            Params::Real(layers) => {
                let a0 = real_input(&self.view, input)?;
                forward_layers(layers, a0, axis, backend)
            }
        }
    }

    pub fn predict(&self, input: NetworkInput, backend: &mut Backend) -> Result<usize> {
        Ok(argmax(&self.logits(input, backend)?))
    }
}

/// Runs the full network: embedding (if any), every layer, real logits.
pub fn network_forward(
    state: &NetworkState,
    input: NetworkInput,
    backend: &mut Backend,
    quant: &Constellation,
) -> Result<Vec<f64>> {
    QuantizedNetwork::new(state, quant)?.logits(input, backend)
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
