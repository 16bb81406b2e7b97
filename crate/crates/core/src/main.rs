use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qam_onn::datasets::{generate_rf_dataset, write_rf_csv, DEFAULT_SEQUENCE_LEN};
use qam_onn::harness::{
    boundary_path, cell_means, history_path, run_eval, run_experiment, run_training, EvalRun, ExperimentConfig,
    ExperimentKind, TrainRun,
};
use qam_onn::{Error, Result};

/// QAM photonic multiplication simulator and experiment runner.
#[derive(Parser)]
#[command(name = "qam-onn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one network and save a checkpoint plus history CSV.
    Train(Common),
    /// Evaluate a checkpoint on a test set; prints a JSON report.
    Eval(Common),
    /// SNR x QAM-side accuracy-degradation grid.
    NoiseGrid(Common),
    /// QAM network vs equivalent 1D ONN sweep (level_eq, hardware_eq or energy_eq).
    EquivSweep(Common),
    /// Equivalence table with closed-form energies.
    EnergyTable {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic RF modulation dataset as CSV.
    RfGen {
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 500)]
        per_class: usize,
        #[arg(long, default_value_t = DEFAULT_SEQUENCE_LEN)]
        seq_len: usize,
        /// Channel SNR in dB; `inf` for a clean channel.
        #[arg(long, default_value_t = 20.0)]
        snr_db: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn output(out: Option<PathBuf>, configured: Option<PathBuf>) -> Result<PathBuf> {
    out.or(configured)
        .ok_or_else(|| Error::Config("no output path: pass --out or set `output`".into()))
}

fn experiment(common: &Common, expected: &[ExperimentKind]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if !expected.contains(&cfg.kind) {
        return Err(Error::Config(format!(
            "{}: kind {} does not fit this subcommand",
            common.config.display(),
            cfg.kind.name()
        )));
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn print_means(records: &[qam_onn::harness::ResultRecord]) {
    println!("variant,total_levels,side,snr_db,hidden_size,seeds,mean_accuracy,mean_drop");
    for m in cell_means(records) {
        let opt = |v: Option<String>| v.unwrap_or_default();
        println!(
            "{},{},{},{},{},{},{:.4},{:.4}",
            m.variant,
            opt(m.total_levels.map(|v| v.to_string())),
            opt(m.side.map(|v| v.to_string())),
            opt(m.snr_db.map(|v| v.to_string())),
            m.hidden_size,
            m.seeds,
            m.mean_accuracy,
            m.mean_drop
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(c) => {
            let mut run = TrainRun::load(&c.config)?;
            if let Some(seed) = c.seed {
                run.train.seed = seed;
            }
            let out = output(c.out, run.output.clone())?;
            let h = run_training(&run, &out)?;
            eprintln!(
                "wrote {} and {} (final test accuracy {:.4})",
                out.display(),
                history_path(&out).display(),
                h.test_accuracy.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Eval(c) => {
            let mut run = EvalRun::load(&c.config)?;
            if let Some(seed) = c.seed {
                run.seed = seed;
            }
            let report = run_eval(&run)?;
            let text = serde_json::to_string(&report)?;
            println!("{text}");
            if let Some(out) = c.out.or(run.output) {
                std::fs::write(&out, text + "\n").map_err(|e| Error::Io { path: out, source: e })?;
            }
        }
        Command::NoiseGrid(c) => {
            let cfg = experiment(&c, &[ExperimentKind::NoiseGrid])?;
            let a = run_experiment(&cfg, None)?;
            print_means(&a.records);
            eprintln!("wrote {} and {}", a.csv.display(), boundary_path(&a.csv).display());
        }
        Command::EquivSweep(c) => {
            let cfg = experiment(
                &c,
                &[ExperimentKind::LevelEq, ExperimentKind::HardwareEq, ExperimentKind::EnergyEq],
            )?;
            let a = run_experiment(&cfg, None)?;
            print_means(&a.records);
            eprintln!("wrote {}", a.csv.display());
        }
        Command::EnergyTable { config, out } => {
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::new(ExperimentKind::EnergyTable),
            };
            if cfg.kind != ExperimentKind::EnergyTable {
                return Err(Error::Config(format!("kind {} is not energy_table", cfg.kind.name())));
            }
            cfg.output = Some(output(out, cfg.output.clone())?);
            let a = run_experiment(&cfg, None)?;
            print!("{}", std::fs::read_to_string(&a.csv).map_err(|e| Error::Io { path: a.csv.clone(), source: e })?);
        }
        Command::RfGen {
            classes,
            per_class,
            seq_len,
            snr_db,
            seed,
            out,
        } => {
            let data = generate_rf_dataset(classes, per_class, seq_len, snr_db, seed)?;
            write_rf_csv(&out, &data)?;
            eprintln!("wrote {} sequences to {}", data.len(), Path::new(&out).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
