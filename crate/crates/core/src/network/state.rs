use num_complex::Complex64;
use rand::Rng;

use super::scalar::Scalar;
use super::spec::{NetworkSpec, ValueKind, PIXEL_VOCABULARY};
use crate::error::{Error, Result};
use crate::quant::{Constellation, Constellation1D};

/// One fully connected layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![T::ZERO; inputs * outputs],
            biases: vec![T::ZERO; outputs],
        }
    }

    pub fn new(inputs: usize, outputs: usize, weights: Vec<T>, biases: Vec<T>) -> Result<Self> {
        if weights.len() != inputs * outputs || biases.len() != outputs {
            return Err(Error::Input(format!(
                "layer {inputs}->{outputs} needs {} weights and {outputs} biases, got {} and {}",
                inputs * outputs,
                weights.len(),
                biases.len()
            )));
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            biases,
        })
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.weights[k * self.inputs..(k + 1) * self.inputs]
    }

    pub fn quantized(&self, axis: &Constellation1D) -> Self {
        let q = |v: &T| v.map_axes(|a| axis.quantize(a));
        Self {
            inputs: self.inputs,
            outputs: self.outputs,
            weights: self.weights.iter().map(q).collect(),
            biases: self.biases.iter().map(q).collect(),
        }
    }

    fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let r = (6.0 / (inputs + outputs) as f64).sqrt().min(1.0);
        let mut sample = || {
            let mut v = T::ZERO;
            for i in 0..T::AXES {
                v = v.with_axis(i, rng.random_range(-r..=r));
            }
            v
        };
        let weights = (0..inputs * outputs).map(|_| sample()).collect();
        Self {
            inputs,
            outputs,
            weights,
            biases: vec![T::ZERO; outputs],
        }
    }
}

/// Per-kind parameter storage.
#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Complex(Vec<Layer<Complex64>>),
    Real(Vec<Layer<f64>>),
}

/// Trainable lookup table from pixel intensity to a complex value.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub table: Vec<Complex64>,
}

impl Embedding {
    pub fn zeros() -> Self {
        Self {
            table: vec![Complex64::new(0.0, 0.0); PIXEL_VOCABULARY],
        }
    }

    /// Row `k` set to `k / 255 + 0i`.
    pub fn ramp() -> Self {
        Self {
            table: (0..PIXEL_VOCABULARY)
                .map(|k| Complex64::new(k as f64 / 255.0, 0.0))
                .collect(),
        }
    }

    pub fn from_table(table: Vec<Complex64>) -> Result<Self> {
        if table.len() != PIXEL_VOCABULARY {
            return Err(Error::Input(format!(
                "embedding table needs {PIXEL_VOCABULARY} rows, got {}",
                table.len()
            )));
        }
        Ok(Self { table })
    }

    fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            table: (0..PIXEL_VOCABULARY)
                .map(|_| Complex64::new(rng.random_range(-0.5..=0.5), rng.random_range(-0.5..=0.5)))
                .collect(),
        }
    }

    pub fn lookup(&self, pixel: usize) -> Result<Complex64> {
        self.table.get(pixel).copied().ok_or_else(|| {
            Error::Input(format!(
                "pixel {pixel} outside the vocabulary 0..{PIXEL_VOCABULARY}"
            ))
        })
    }
}

/// Map a pixel to its complex embedding.
pub fn embed(pixel: usize, table: &Embedding) -> Result<Complex64> {
    table.lookup(pixel)
}

/// Weights, biases and (for pixel inputs) the embedding table of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub spec: NetworkSpec,
    pub params: Params,
    pub embedding: Option<Embedding>,
}

fn zero_layers<T: Scalar>(spec: &NetworkSpec) -> Vec<Layer<T>> {
    spec.layer_sizes
        .windows(2)
        .map(|w| Layer::zeros(w[0], w[1]))
        .collect()
}

fn init_layers<T: Scalar, R: Rng + ?Sized>(spec: &NetworkSpec, rng: &mut R) -> Vec<Layer<T>> {
    spec.layer_sizes
        .windows(2)
        .map(|w| Layer::init(w[0], w[1], rng))
        .collect()
}

impl NetworkState {
    /// All-zero weights, biases and embedding.
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let params = match spec.value_kind {
            ValueKind::Complex => Params::Complex(zero_layers(&spec)),
            ValueKind::Real => Params::Real(zero_layers(&spec)),
        };
        let embedding = spec.has_embedding.then(Embedding::zeros);
        Ok(Self {
            spec,
            params,
            embedding,
        })
    }

    /// Uniform initialization in `[-r, r]` per axis with
    /// `r = min(1, sqrt(6 / (fan_in + fan_out)))`; zero biases; embedding
    /// rows uniform in `[-0.5, 0.5]^2`.
    pub fn init<R: Rng + ?Sized>(spec: NetworkSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let embedding = spec.has_embedding.then(|| Embedding::init(rng));
        let params = match spec.value_kind {
            ValueKind::Complex => Params::Complex(init_layers(&spec, rng)),
            ValueKind::Real => Params::Real(init_layers(&spec, rng)),
        };
        Ok(Self {
            spec,
            params,
            embedding,
        })
    }

    /// Builds a state from explicit layers, checking shapes against `spec`.
    pub fn from_parts(spec: NetworkSpec, params: Params, embedding: Option<Embedding>) -> Result<Self> {
        spec.validate()?;
        let shapes: Vec<(usize, usize)> = match &params {
            Params::Complex(l) => l.iter().map(|l| (l.inputs, l.outputs)).collect(),
            Params::Real(l) => l.iter().map(|l| (l.inputs, l.outputs)).collect(),
        };
        let expected: Vec<(usize, usize)> =
            spec.layer_sizes.windows(2).map(|w| (w[0], w[1])).collect();
        if shapes != expected {
            return Err(Error::Input(format!(
                "layer shapes {shapes:?} do not match spec {expected:?}"
            )));
        }
        let kind_ok = matches!(
            (&params, spec.value_kind),
            (Params::Complex(_), ValueKind::Complex) | (Params::Real(_), ValueKind::Real)
        );
        if !kind_ok {
            return Err(Error::Config("parameter kind does not match the spec".into()));
        }
        if spec.has_embedding != embedding.is_some() {
            return Err(Error::Config("embedding presence does not match the spec".into()));
        }
        Ok(Self {
            spec,
            params,
            embedding,
        })
    }

    /// Real numbers held in the weights and biases.
    pub fn weight_value_count(&self) -> usize {
        fn count<T: Scalar>(layers: &[Layer<T>]) -> usize {
            layers
                .iter()
                .map(|l| (l.weights.len() + l.biases.len()) * T::AXES)
                .sum()
        }
        match &self.params {
            Params::Complex(l) => count(l),
            Params::Real(l) => count(l),
        }
    }

    /// Checks that `constellation` applies to this network's value kind.
    pub fn check_constellation(&self, constellation: &Constellation) -> Result<()> {
        match (self.spec.value_kind, constellation) {
            (_, Constellation::FullPrecision)
            | (ValueKind::Complex, Constellation::Qam(_))
            | (ValueKind::Real, Constellation::Levels(_)) => Ok(()),
            (kind, c) => Err(Error::Config(format!(
                "constellation {c:?} cannot be used with a {kind:?} network"
            ))),
        }
    }

    /// Weights, biases and embedding rows mapped through the constellation.
    pub fn quantized(&self, constellation: &Constellation) -> Result<Self> {
        self.check_constellation(constellation)?;
        let Some(axis) = constellation.axis() else {
            return Ok(self.clone());
        };
        let params = match &self.params {
            Params::Complex(l) => Params::Complex(l.iter().map(|l| l.quantized(&axis)).collect()),
            Params::Real(l) => Params::Real(l.iter().map(|l| l.quantized(&axis)).collect()),
        };
        let embedding = self.embedding.as_ref().map(|e| Embedding {
            table: e.table.iter().map(|&z| axis.quantize_complex(z)).collect(),
        });
        Ok(Self {
            spec: self.spec.clone(),
            params,
            embedding,
        })
    }
}
