use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Complex,
    Real,
}

/// Hidden-layer nonlinearity. `SplitRelu` applies ReLU to the real and
/// imaginary parts independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    SplitRelu,
    Relu,
}

/// Vocabulary size of the pixel embedding.
pub const PIXEL_VOCABULARY: usize = 256;

/// Shape of an MLP: `layer_sizes = [h0, h1, ..., h_{L+1}]`, input first,
/// classes last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layer_sizes: Vec<usize>,
    pub value_kind: ValueKind,
    pub activation: Activation,
    pub has_embedding: bool,
}

impl NetworkSpec {
    /// Complex network with a split-ReLU activation.
    pub fn complex(layer_sizes: Vec<usize>, has_embedding: bool) -> Result<Self> {
        let spec = Self {
            layer_sizes,
            value_kind: ValueKind::Complex,
            activation: Activation::SplitRelu,
            has_embedding,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Real-valued (1D ONN) network with ReLU.
    pub fn real(layer_sizes: Vec<usize>) -> Result<Self> {
        let spec = Self {
            layer_sizes,
            value_kind: ValueKind::Real,
            activation: Activation::Relu,
            has_embedding: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return Err(Error::Config(format!(
                "a network needs an input, at least one hidden layer and an output; got sizes {:?}",
                self.layer_sizes
            )));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::Config(format!(
                "layer sizes must be positive: {:?}",
                self.layer_sizes
            )));
        }
        match (self.value_kind, self.activation) {
            (ValueKind::Complex, Activation::SplitRelu) | (ValueKind::Real, Activation::Relu) => {}
            (kind, act) => {
                return Err(Error::Config(format!(
                    "activation {act:?} does not apply to {kind:?} networks"
                )))
            }
        }
        if self.has_embedding && self.value_kind != ValueKind::Complex {
            return Err(Error::Config(
                "the pixel embedding is only defined for complex networks".into(),
            ));
        }
        Ok(())
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn classes(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Number of hidden layers, `L`.
    pub fn hidden_layers(&self) -> usize {
        self.layer_sizes.len() - 2
    }

    /// Real numbers in the weights and biases; a complex parameter counts twice.
    pub fn weight_value_count(&self) -> usize {
        let per_kind: usize = self
            .layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum();
        match self.value_kind {
            ValueKind::Complex => 2 * per_kind,
            ValueKind::Real => per_kind,
        }
    }
}
