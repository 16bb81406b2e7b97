use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::DatasetRef;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    NoiseGrid,
    LevelEq,
    HardwareEq,
    EnergyEq,
    EnergyTable,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::NoiseGrid => "noise_grid",
            ExperimentKind::LevelEq => "level_eq",
            ExperimentKind::HardwareEq => "hardware_eq",
            ExperimentKind::EnergyEq => "energy_eq",
            ExperimentKind::EnergyTable => "energy_table",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Hidden layer sizes of the network trained for the noise grid.
    #[serde(default = "default_hidden")]
    pub hidden_sizes: Vec<usize>,
    /// Image side `w` used by the energy table.
    #[serde(default = "default_input_side")]
    pub input_side: u64,
    #[serde(default = "default_classes")]
    pub classes: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: default_hidden(),
            input_side: default_input_side(),
            classes: default_classes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSettings {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            batch_size: default_batch(),
            learning_rate: default_lr(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_snrs")]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_sides")]
    pub sides: Vec<u32>,
    /// QAM total levels `N` for the equivalence sweeps and energy table.
    #[serde(default = "default_levels")]
    pub levels: Vec<u64>,
    /// Hidden sizes for the equivalence sweeps and energy table.
    #[serde(default = "default_hidden")]
    pub hidden_sizes: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            snr_db: default_snrs(),
            sides: default_sides(),
            levels: default_levels(),
            hidden_sizes: default_hidden(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseGridSettings {
    /// Training examples used for PTQ calibration, spread evenly over
    /// the training set.
    #[serde(default = "default_calibration")]
    pub calibration_size: usize,
    /// Evaluate this network instead of training one.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    /// Where to save the trained network.
    #[serde(default)]
    pub save_checkpoint: Option<PathBuf>,
    /// Drop (percentage points) bounding the highlighted region.
    #[serde(default = "default_threshold")]
    pub threshold_pp: f64,
}

impl Default for NoiseGridSettings {
    fn default() -> Self {
        Self {
            calibration_size: default_calibration(),
            checkpoint: None,
            save_checkpoint: None,
            threshold_pp: default_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub master_seed: u64,
    /// Seeds per grid cell.
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default)]
    pub dataset: Option<DatasetRef>,
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub training: TrainingSettings,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub noise_grid: NoiseGridSettings,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Off by default so repeated runs give byte-identical CSV.
    #[serde(default)]
    pub record_wall_time: bool,
}

fn default_hidden() -> Vec<usize> {
    vec![16]
}
fn default_input_side() -> u64 {
    7
}
fn default_classes() -> u64 {
    10
}
fn default_epochs() -> usize {
    30
}
fn default_batch() -> usize {
    128
}
fn default_lr() -> f64 {
    1e-3
}
fn default_snrs() -> Vec<f64> {
    vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0, f64::INFINITY]
}
fn default_sides() -> Vec<u32> {
    vec![2, 4, 8, 16, 32, 64, 128]
}
fn default_levels() -> Vec<u64> {
    vec![4, 16, 64, 256]
}
fn default_calibration() -> usize {
    512
}
fn default_threshold() -> f64 {
    5.0
}
fn default_seeds() -> usize {
    3
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            version: CONFIG_VERSION,
            kind,
            id: None,
            master_seed: 0,
            seeds: default_seeds(),
            dataset: None,
            network: NetworkConfig::default(),
            training: TrainingSettings::default(),
            grid: GridConfig::default(),
            noise_grid: NoiseGridSettings::default(),
            output: None,
            record_wall_time: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn experiment_id(&self) -> String {
        self.id.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            ));
        }
        if self.seeds == 0 {
            return bad("seeds per cell must be at least 1".into());
        }
        let needs_data = self.kind != ExperimentKind::EnergyTable;
        if needs_data && self.dataset.is_none() {
            return bad(format!("{} needs a [dataset] section", self.kind.name()));
        }
        match self.kind {
            ExperimentKind::NoiseGrid => {
                if self.grid.snr_db.is_empty() || self.grid.sides.is_empty() {
                    return bad("noise grid needs non-empty snr_db and sides".into());
                }
                if let Some(s) = self.grid.snr_db.iter().find(|s| s.is_nan() || **s == f64::NEG_INFINITY) {
                    return bad(format!("SNR {s} dB is not usable"));
                }
                if let Some(s) = self.grid.sides.iter().find(|&&s| s < 2) {
                    return bad(format!("QAM side {s} is below 2"));
                }
                if self.noise_grid.calibration_size == 0 {
                    return bad("calibration_size must be positive".into());
                }
            }
            _ => {
                if self.grid.levels.is_empty() || self.grid.hidden_sizes.is_empty() {
                    return bad("sweep needs non-empty levels and hidden_sizes".into());
                }
                if self.grid.hidden_sizes.contains(&0) {
                    return bad("hidden sizes must be positive".into());
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_energy_table_config() {
        let cfg = ExperimentConfig::from_toml("version = 1\nkind = \"energy_table\"\n").unwrap();
        assert_eq!(cfg.grid.levels, vec![4, 16, 64, 256]);
        assert_eq!(cfg.experiment_id(), "energy_table");
    }

    #[test]
    fn infinite_snr_parses() {
        let text = r#"
version = 1
kind = "noise_grid"
[dataset]
source = "rf"
classes = 4
train_per_class = 10
test_per_class = 5
snr_db = 20
seed = 1
[grid]
snr_db = [10, 20.5, inf]
sides = [4]
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.grid.snr_db, vec![10.0, 20.5, f64::INFINITY]);
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "version = 2\nkind = \"energy_table\"\n",
            "version = 1\nkind = \"noise_grid\"\n",
            "version = 1\nkind = \"energy_table\"\nseeds = 0\n",
            "version = 1\nkind = \"warp\"\n",
            "version = 1\nkind = \"energy_table\"\nbogus = 3\n",
        ] {
            assert_eq!(ExperimentConfig::from_toml(text).unwrap_err().kind(), "config", "{text}");
        }
    }
}
