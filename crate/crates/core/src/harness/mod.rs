//! Experiment runner: noise grids, equivalence sweeps and the energy table.

mod config;
mod grid;
mod record;
mod runs;

use std::path::{Path, PathBuf};

pub use config::{
    ExperimentConfig, ExperimentKind, GridConfig, NetworkConfig, NoiseGridSettings, TrainingSettings, CONFIG_VERSION,
};
pub use grid::{derive_seed, run_equivalence_sweep, run_noise_grid, NoiseGridOutput};
pub use record::{
    cell_means, emit_csv, emit_energy_table, energy_table_rows, read_csv, read_energy_table, CellMean, ResultRecord,
    ENERGY_COLUMNS, RESULT_COLUMNS,
};
pub use runs::{
    history_path, run_eval, run_training, BackendKind, EvalReport, EvalRun, PtqSettings, TrainRun,
};

use crate::error::{Error, Result};

/// Files written by [`run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub csv: PathBuf,
    pub boundary_json: Option<PathBuf>,
    pub records: Vec<ResultRecord>,
}

/// Path of the JSON file written next to a noise-grid CSV.
pub fn boundary_path(csv: &Path) -> PathBuf {
    csv.with_extension("boundary.json")
}

/// Runs the configured experiment and writes its CSV to `out` (or the
/// config's `output`). Noise grids also write the region boundary JSON.
pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunArtifacts> {
    let csv = out
        .map(Path::to_path_buf)
        .or_else(|| config.output.clone())
        .ok_or_else(|| Error::Config("no output path given".into()))?;
    match config.kind {
        ExperimentKind::EnergyTable => {
            config.validate()?;
            let w = config.network.input_side;
            let c = config.network.classes;
            let h = config.grid.hidden_sizes[0] as u64;
            emit_energy_table(&config.grid.levels, (w, h, c), &csv)?;
            Ok(RunArtifacts {
                csv,
                boundary_json: None,
                records: Vec::new(),
            })
        }
        ExperimentKind::NoiseGrid => {
            let out = run_noise_grid(config)?;
            emit_csv(&out.records, &csv)?;
            let json_path = boundary_path(&csv);
            let text = serde_json::to_string_pretty(&out.boundary)? + "\n";
            std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
            Ok(RunArtifacts {
                csv,
                boundary_json: Some(json_path),
                records: out.records,
            })
        }
        _ => {
            let records = run_equivalence_sweep(config)?;
            emit_csv(&records, &csv)?;
            Ok(RunArtifacts {
                csv,
                boundary_json: None,
                records,
            })
        }
    }
}
