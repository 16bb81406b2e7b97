//! Post-training quantization with independent affine factors per neuron.
//!
//! Each inner-product output is shifted and scaled so that the values seen on
//! a calibration set fill [-1, 1], snapped to the constellation grid and
//! mapped back. Weight rows get a symmetric per-neuron scale, and the network
//! input gets a per-feature affine map calibrated the same way.

use serde::{Deserialize, Serialize};

use super::forward::{complex_input, readout, real_input, relu_axes, Backend, NetworkInput};
use super::scalar::Scalar;
use super::state::{Layer, NetworkState, Params};
use crate::error::{Error, Result};
use crate::quant::{Constellation, Constellation1D};

/// Lower bound on the calibrated half-range; keeps dead neurons finite.
pub const SCALE_FLOOR: f64 = 1e-8;

/// `u = (z - zero_point) * scale`, applied per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineQuant {
    pub scale: f64,
    pub zero_point: [f64; 2],
}

impl AffineQuant {
    /// Maps `[lo, hi]` on each axis into [-1, 1] with one shared scale.
    pub fn from_ranges(ranges: &[(f64, f64)]) -> Self {
        let mut half = 0.0f64;
        let mut zero_point = [0.0; 2];
        for (i, &(lo, hi)) in ranges.iter().enumerate().take(2) {
            half = half.max((hi - lo) / 2.0);
            zero_point[i] = (hi + lo) / 2.0;
        }
        Self {
            scale: 1.0 / half.max(SCALE_FLOOR),
            zero_point,
        }
    }

    /// Symmetric map for values bounded by `max_abs`.
    pub fn symmetric(max_abs: f64) -> Self {
        Self {
            scale: 1.0 / max_abs.max(SCALE_FLOOR),
            zero_point: [0.0; 2],
        }
    }

    pub fn normalize<T: Scalar>(&self, z: T) -> T {
        let mut out = z;
        for i in 0..T::AXES {
            out = out.with_axis(i, (z.axis(i) - self.zero_point[i]) * self.scale);
        }
        out
    }

    pub fn denormalize<T: Scalar>(&self, u: T) -> T {
        let mut out = u;
        for i in 0..T::AXES {
            out = out.with_axis(i, u.axis(i) / self.scale + self.zero_point[i]);
        }
        out
    }

    /// Scale, quantize, unscale.
    pub fn fake_quantize<T: Scalar>(&self, z: T, grid: &Constellation1D) -> T {
        self.denormalize(self.normalize(z).map_axes(|v| grid.quantize(v)))
    }
}

/// Per-neuron factors for every inner-product output, plus per-feature
/// factors for the network input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PtqCalibration {
    pub input: Vec<AffineQuant>,
    pub layers: Vec<Vec<AffineQuant>>,
}

#[derive(Clone)]
struct RangeTracker {
    ranges: Vec<[(f64, f64); 2]>,
}

impl RangeTracker {
    fn new(n: usize) -> Self {
        Self {
            ranges: vec![[(f64::INFINITY, f64::NEG_INFINITY); 2]; n],
        }
    }

    fn observe<T: Scalar>(&mut self, values: &[T]) {
        for (r, v) in self.ranges.iter_mut().zip(values) {
            for (i, axis) in r.iter_mut().enumerate().take(T::AXES) {
                let x = v.axis(i);
                axis.0 = axis.0.min(x);
                axis.1 = axis.1.max(x);
            }
        }
    }

    fn finish<T: Scalar>(&self) -> Vec<AffineQuant> {
        self.ranges
            .iter()
            .map(|r| AffineQuant::from_ranges(&r[..T::AXES]))
            .collect()
    }
}

fn calibrate_layers<T: Scalar>(
    layers: &[Layer<T>],
    inputs: impl Iterator<Item = Result<Vec<T>>>,
) -> Result<PtqCalibration> {
    let mut input = RangeTracker::new(layers[0].inputs);
    let mut trackers: Vec<RangeTracker> =
        layers.iter().map(|l| RangeTracker::new(l.outputs)).collect();
    let mut backend = Backend::Digital;
    let mut seen = 0usize;
    for a0 in inputs {
        let mut a = a0?;
        input.observe(&a);
        for (layer, tracker) in layers.iter().zip(trackers.iter_mut()) {
            let mut z = readout(layer, &a, &mut backend)?;
            for (zk, &bk) in z.iter_mut().zip(&layer.biases) {
                *zk += bk;
            }
            tracker.observe(&z);
            a = z.into_iter().map(relu_axes).collect();
        }
        seen += 1;
    }
    if seen == 0 {
        return Err(Error::Input("calibration set is empty".into()));
    }
    Ok(PtqCalibration {
        input: input.finish::<T>(),
        layers: trackers.iter().map(|t| t.finish::<T>()).collect(),
    })
}

/// Observes full-precision pre-activations over the calibration set and
/// derives one affine map per neuron.
pub fn ptq_calibrate(state: &NetworkState, calibration: &[NetworkInput]) -> Result<PtqCalibration> {
    match &state.params {
        Params::Complex(layers) => {
            calibrate_layers(layers, calibration.iter().map(|&x| complex_input(state, x)))
        }
        Params::Real(layers) => {
            calibrate_layers(layers, calibration.iter().map(|&x| real_input(state, x)))
        }
    }
}

fn quantize_rows<T: Scalar>(layer: &Layer<T>, grid: &Constellation1D) -> Layer<T> {
    let mut out = layer.clone();
    for k in 0..layer.outputs {
        let max_abs = layer
            .row(k)
            .iter()
            .flat_map(|w| (0..T::AXES).map(move |i| w.axis(i).abs()))
            .fold(0.0f64, f64::max);
        let q = AffineQuant::symmetric(max_abs);
        for w in &mut out.weights[k * layer.inputs..(k + 1) * layer.inputs] {
            *w = q.fake_quantize(*w, grid);
        }
    }
    out
}

/// A trained network prepared for post-training-quantized inference.
#[derive(Debug, Clone)]
pub struct PtqNetwork {
    state: NetworkState,
    calibration: PtqCalibration,
    grid: Option<Constellation1D>,
}

impl PtqNetwork {
    pub fn new(state: &NetworkState, calibration: &PtqCalibration, quant: &Constellation) -> Result<Self> {
        state.check_constellation(quant)?;
        let grid = quant.axis();
        let n_layers = state.spec.layer_sizes.len() - 1;
        if calibration.layers.len() != n_layers
            || calibration.input.len() != state.spec.input_size()
            || calibration
                .layers
                .iter()
                .zip(&state.spec.layer_sizes[1..])
                .any(|(c, &h)| c.len() != h)
        {
            return Err(Error::Input("calibration does not match the network shape".into()));
        }
        let mut state = state.clone();
        if let Some(g) = &grid {
            state.params = match &state.params {
                Params::Complex(l) => Params::Complex(l.iter().map(|l| quantize_rows(l, g)).collect()),
                Params::Real(l) => Params::Real(l.iter().map(|l| quantize_rows(l, g)).collect()),
            };
        }
        Ok(Self {
            state,
            calibration: calibration.clone(),
            grid,
        })
    }

    pub fn logits(&self, input: NetworkInput, backend: &mut Backend) -> Result<Vec<f64>> {
        backend.check_kind(self.state.spec.value_kind)?;
        match &self.state.params {
            Params::Complex(layers) => {
                let a0 = complex_input(&self.state, input)?;
                self.forward(layers, a0, backend)
            }
            Params::Real(layers) => {
                let a0 = real_input(&self.state, input)?;
                self.forward(layers, a0, backend)
            }
        }
    }

    fn forward<T: Scalar>(&self, layers: &[Layer<T>], a0: Vec<T>, backend: &mut Backend) -> Result<Vec<f64>> {
        let fq = |v: T, q: &AffineQuant| match &self.grid {
            Some(g) => q.fake_quantize(v, g),
            None => v,
        };
        let mut a: Vec<T> = a0
            .iter()
            .zip(&self.calibration.input)
            .map(|(&v, q)| fq(v, q))
            .collect();
        let last = layers.len() - 1;
        for (i, (layer, calib)) in layers.iter().zip(&self.calibration.layers).enumerate() {
            let mut z = readout(layer, &a, backend)?;
            for ((zk, &bk), q) in z.iter_mut().zip(&layer.biases).zip(calib) {
                *zk = fq(*zk + bk, q);
            }
            if i == last {
                return Ok(z.into_iter().map(Scalar::logit).collect());
            }
            a = z.into_iter().map(relu_axes).collect();
        }
        unreachable!("networks have at least one layer")
    }

    pub fn predict(&self, input: NetworkInput, backend: &mut Backend) -> Result<usize> {
        Ok(super::forward::argmax(&self.logits(input, backend)?))
    }
}
