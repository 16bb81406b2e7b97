//! Versioned JSON checkpoints.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spec::NetworkSpec;
use super::state::{Embedding, Layer, NetworkState, Params};
use crate::error::{Error, Result};
use crate::quant::Constellation;

pub const CHECKPOINT_FORMAT: &str = "qam-onn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Values {
    Complex(Vec<[f64; 2]>),
    Real(Vec<f64>),
}

impl Values {
    fn complex(v: &[Complex64]) -> Self {
        Values::Complex(v.iter().map(|z| [z.re, z.im]).collect())
    }

    fn into_complex(self, what: &str) -> Result<Vec<Complex64>> {
        match self {
            Values::Complex(v) => Ok(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()),
            Values::Real(v) if v.is_empty() => Ok(Vec::new()),
            Values::Real(_) => Err(Error::Serde(format!("{what}: expected [re, im] pairs"))),
        }
    }

    fn into_real(self, what: &str) -> Result<Vec<f64>> {
        match self {
            Values::Real(v) => Ok(v),
            Values::Complex(v) if v.is_empty() => Ok(Vec::new()),
            Values::Complex(_) => Err(Error::Serde(format!("{what}: expected plain numbers"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerRecord {
    inputs: usize,
    outputs: usize,
    weights: Values,
    biases: Values,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    spec: NetworkSpec,
    constellation: Constellation,
    layers: Vec<LayerRecord>,
    embedding: Option<Vec<[f64; 2]>>,
}

/// A trained network together with the constellation it was trained for.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub state: NetworkState,
    pub constellation: Constellation,
}

impl Checkpoint {
    pub fn new(state: NetworkState, constellation: Constellation) -> Result<Self> {
        state.check_constellation(&constellation)?;
        Ok(Self { state, constellation })
    }

    pub fn to_json(&self) -> Result<String> {
        let layers = match &self.state.params {
            Params::Complex(ls) => ls
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: Values::complex(&l.weights),
                    biases: Values::complex(&l.biases),
                })
                .collect(),
            Params::Real(ls) => ls
                .iter()
                .map(|l| LayerRecord {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weights: Values::Real(l.weights.clone()),
                    biases: Values::Real(l.biases.clone()),
                })
                .collect(),
        };
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            spec: self.state.spec.clone(),
            constellation: self.constellation,
            layers,
            embedding: self
                .state
                .embedding
                .as_ref()
                .map(|e| e.table.iter().map(|z| [z.re, z.im]).collect()),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text)?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(Error::Serde(format!("not a checkpoint: format {:?}", file.format)));
        }
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::Serde(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                file.version
            )));
        }
        let params = match file.spec.value_kind {
            super::ValueKind::Complex => Params::Complex(
                file.layers
                    .into_iter()
                    .map(|r| {
                        Layer::new(
                            r.inputs,
                            r.outputs,
                            r.weights.into_complex("weights")?,
                            r.biases.into_complex("biases")?,
                        )
                    })
                    .collect::<Result<_>>()?,
            ),
            super::ValueKind::Real => Params::Real(
                file.layers
                    .into_iter()
                    .map(|r| {
                        Layer::new(
                            r.inputs,
                            r.outputs,
                            r.weights.into_real("weights")?,
                            r.biases.into_real("biases")?,
                        )
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        let embedding = file
            .embedding
            .map(|t| Embedding::from_table(t.into_iter().map(|[re, im]| Complex64::new(re, im)).collect()))
            .transpose()?;
        let state = NetworkState::from_parts(file.spec, params, embedding)?;
        Self::new(state, file.constellation)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
