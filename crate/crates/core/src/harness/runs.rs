use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::CONFIG_VERSION;
use crate::error::{Error, Result};
use crate::network::{ptq_calibrate, Backend, Checkpoint, NetworkInput, PtqNetwork, QuantizedNetwork};
use crate::photonics::NoiseModel;
use crate::quant::Constellation;
use crate::training::{train, DatasetRef, TrainConfig, TrainHistory};

fn check_version(v: u32) -> Result<()> {
    if v != CONFIG_VERSION {
        return Err(Error::Config(format!(
            "config version {v} is not supported (expected {CONFIG_VERSION})"
        )));
    }
    Ok(())
}

fn parse_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// A single training run: the network is saved as a checkpoint and the
/// per-epoch history as CSV next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRun {
    pub version: u32,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub train: TrainConfig,
}

impl TrainRun {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let run: Self = parse_toml(path.as_ref())?;
        check_version(run.version)?;
        Ok(run)
    }
}

pub fn history_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("history.csv")
}

/// Trains, then writes the checkpoint to `out` and the history CSV beside it.
pub fn run_training(run: &TrainRun, out: &Path) -> Result<TrainHistory> {
    let history = train(&run.train)?;
    Checkpoint::new(history.final_state.clone(), run.train.constellation)?.save(out)?;
    let hp = history_path(out);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&hp)
        .map_err(|e| Error::Serde(format!("{}: {e}", hp.display())))?;
    w.write_record(["epoch", "train_loss", "train_accuracy", "test_accuracy"])?;
    for e in 0..history.train_loss.len() {
        w.write_record([
            e.to_string(),
            history.train_loss[e].to_string(),
            history.train_accuracy[e].to_string(),
            history.test_accuracy[e].to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&hp, e))?;
    Ok(history)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Digital,
    /// I/Q engine for complex networks, amplitude engine for real ones.
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PtqSettings {
    pub constellation: Constellation,
    #[serde(default = "default_calibration")]
    pub calibration_size: usize,
}

fn default_calibration() -> usize {
    512
}

fn default_snr() -> f64 {
    f64::INFINITY
}

/// Test-set evaluation of a saved network. Without `ptq` the checkpoint's
/// own training constellation is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRun {
    pub version: u32,
    pub checkpoint: PathBuf,
    pub dataset: DatasetRef,
    #[serde(default)]
    pub backend: BackendKind,
    #[serde(default = "default_snr")]
    pub snr_db: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ptq: Option<PtqSettings>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl EvalRun {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let run: Self = parse_toml(path.as_ref())?;
        check_version(run.version)?;
        Ok(run)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub examples: usize,
    pub backend: String,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

type Predictor<'a> = dyn Fn(NetworkInput, &mut Backend) -> Result<usize> + 'a;

pub fn run_eval(run: &EvalRun) -> Result<EvalReport> {
    let ck = Checkpoint::load(&run.checkpoint)?;
    let (train, test) = run.dataset.load()?;
    let mut backend = match run.backend {
        BackendKind::Digital => Backend::Digital,
        BackendKind::Simulated => Backend::simulated(ck.state.spec.value_kind, NoiseModel::new(run.snr_db, run.seed)?),
    };
    let predict: Box<Predictor> = match &run.ptq {
        Some(p) => {
            let n = p.calibration_size.min(train.len());
            if n == 0 {
                return Err(Error::Input("no calibration data".into()));
            }
            let cal: Vec<NetworkInput> = (0..n).map(|i| train.input(i * train.len() / n)).collect();
            let calib = ptq_calibrate(&ck.state, &cal)?;
            let net = PtqNetwork::new(&ck.state, &calib, &p.constellation)?;
            Box::new(move |x, b| net.predict(x, b))
        }
        None => {
            let net = QuantizedNetwork::new(&ck.state, &ck.constellation)?;
            Box::new(move |x, b| net.predict(x, b))
        }
    };
    let mut correct = 0usize;
    for i in 0..test.len() {
        if predict(test.input(i), &mut backend)? == test.labels[i] {
            correct += 1;
        }
    }
    Ok(EvalReport {
        accuracy: correct as f64 / test.len().max(1) as f64,
        examples: test.len(),
        backend: backend.name().into(),
        snr_db: match run.backend {
            BackendKind::Digital => None,
            BackendKind::Simulated => Some(run.snr_db),
        },
        seed: run.seed,
    })
}
