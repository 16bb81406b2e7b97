use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;

use crate::error::Result;
use crate::photonics::{self, NoiseSource};

/// Value type of a network: `f64` for 1D ONNs, `Complex64` for I/Q networks.
///
/// Every per-axis operation (quantization, ReLU, STE masks, optimizer
/// moments) acts independently on each real axis of the value.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + AddAssign
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + 'static
{
    const AXES: usize;
    const ZERO: Self;

    fn conj(self) -> Self;
    fn axis(self, i: usize) -> f64;
    fn with_axis(self, i: usize, v: f64) -> Self;
    fn from_real(v: f64) -> Self;

    /// Network output for one class.
    fn logit(self) -> f64;
    /// Gradient w.r.t. `self` given dL/dlogit.
    fn logit_backward(self, upstream: f64) -> Self;

    /// Noiseless engine readout of `sum_j w_j conj(x_j)`.
    fn engine_dot(w: &[Self], x: &[Self]) -> Self;
    fn add_readout_noise(values: &[Self], noise: &mut NoiseSource) -> Result<Vec<Self>>;

    fn map_axes(self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self;
        for i in 0..Self::AXES {
            out = out.with_axis(i, f(self.axis(i)));
        }
        out
    }

    fn zip_axes(self, other: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = self;
        for i in 0..Self::AXES {
            out = out.with_axis(i, f(self.axis(i), other.axis(i)));
        }
        out
    }

    /// Per-axis product.
    fn hadamard(self, other: Self) -> Self {
        self.zip_axes(other, |a, b| a * b)
    }

    fn is_finite(self) -> bool {
        (0..Self::AXES).all(|i| self.axis(i).is_finite())
    }
}

impl Scalar for f64 {
    const AXES: usize = 1;
    const ZERO: Self = 0.0;

    fn conj(self) -> Self {
        self
    }

    fn axis(self, _i: usize) -> f64 {
        self
    }

    fn with_axis(self, _i: usize, v: f64) -> Self {
        v
    }

    fn from_real(v: f64) -> Self {
        v
    }

    fn logit(self) -> f64 {
        self
    }

    fn logit_backward(self, upstream: f64) -> Self {
        upstream
    }

    fn engine_dot(w: &[Self], x: &[Self]) -> Self {
        photonics::amplitude_charge(w, x)
    }

    fn add_readout_noise(values: &[Self], noise: &mut NoiseSource) -> Result<Vec<Self>> {
        Ok(noise.apply(values)?.values)
    }
}

impl Scalar for Complex64 {
    const AXES: usize = 2;
    const ZERO: Self = Complex64::new(0.0, 0.0);

    fn conj(self) -> Self {
        Complex64::conj(&self)
    }

    fn axis(self, i: usize) -> f64 {
        if i == 0 {
            self.re
        } else {
            self.im
        }
    }

    fn with_axis(mut self, i: usize, v: f64) -> Self {
        if i == 0 {
            self.re = v;
        } else {
            self.im = v;
        }
        self
    }

    fn from_real(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }

    /// Modulus of the output.
    fn logit(self) -> f64 {
        self.norm()
    }

    fn logit_backward(self, upstream: f64) -> Self {
        let r = self.norm();
        if r == 0.0 {
            Self::ZERO
        } else {
            self * (upstream / r)
        }
    }

    fn engine_dot(w: &[Self], x: &[Self]) -> Self {
        photonics::iq_charges(w, x)
    }

    fn add_readout_noise(values: &[Self], noise: &mut NoiseSource) -> Result<Vec<Self>> {
        Ok(noise.apply_complex(values)?.values)
    }
}
