use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind};
use super::record::{cell_means, ResultRecord};
use crate::energy::{client_activation_energy, variant_levels, Variant};
use crate::error::{Error, Result};
use crate::network::{ptq_calibrate, Backend, Checkpoint, NetworkInput, NetworkState, PtqNetwork, ValueKind};
use crate::photonics::NoiseModel;
use crate::quant::{Constellation, Constellation1D, ConstellationQam};
use crate::training::{evaluate, train_on, LabeledData, TrainConfig};

/// Seed for stream `stream` of a run with `master` seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng.next_u64()
}

fn train_config(config: &ExperimentConfig, kind: ValueKind, hidden: Vec<usize>, c: Constellation, seed: u64) -> TrainConfig {
    let mut t = TrainConfig::new(kind, hidden, c, config.dataset.clone().expect("validated"));
    t.epochs = config.training.epochs;
    t.batch_size = config.training.batch_size;
    t.learning_rate = config.training.learning_rate;
    t.seed = seed;
    t
}

fn snr_value(snr: f64) -> Value {
    if snr.is_finite() {
        json!(snr)
    } else {
        json!("inf")
    }
}

/// Outcome of a noise-grid run.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGridOutput {
    pub records: Vec<ResultRecord>,
    pub digital_accuracy: f64,
    /// Cell means and, per side, the lowest SNR from which every cell
    /// stays within the drop threshold.
    pub boundary: Value,
}

fn noise_grid_network(config: &ExperimentConfig, train: &LabeledData, test: &LabeledData) -> Result<NetworkState> {
    if let Some(path) = &config.noise_grid.checkpoint {
        let ck = Checkpoint::load(path)?;
        if ck.state.spec.value_kind != ValueKind::Complex {
            return Err(Error::Config(format!("{}: noise grid needs a complex network", path.display())));
        }
        return Ok(ck.state);
    }
    let t = train_config(
        config,
        ValueKind::Complex,
        config.network.hidden_sizes.clone(),
        Constellation::FullPrecision,
        derive_seed(config.master_seed, 0),
    );
    let state = train_on(&t, train, test)?.final_state;
    if let Some(path) = &config.noise_grid.save_checkpoint {
        Checkpoint::new(state.clone(), Constellation::FullPrecision)?.save(path)?;
    }
    Ok(state)
}

/// Evaluates one digitally trained complex network under PTQ on every
/// (side, SNR) cell with the simulated I/Q backend.
pub fn run_noise_grid(config: &ExperimentConfig) -> Result<NoiseGridOutput> {
    config.validate()?;
    if config.kind != ExperimentKind::NoiseGrid {
        return Err(Error::Config(format!("{} is not a noise grid", config.kind.name())));
    }
    let (train, test) = config.dataset.as_ref().expect("validated").load()?;
    let state = noise_grid_network(config, &train, &test)?;
    let digital = evaluate(&state, &Constellation::FullPrecision, &test, &mut Backend::Digital)?;
    let n_cal = config.noise_grid.calibration_size.min(train.len());
    let calibration: Vec<NetworkInput> = (0..n_cal).map(|i| train.input(i * train.len() / n_cal)).collect();
    let calib = ptq_calibrate(&state, &calibration)?;
    let sizes = state.spec.layer_sizes.clone();
    let id = config.experiment_id();

    let cells: Vec<(u32, f64)> = config
        .grid
        .sides
        .iter()
        .flat_map(|&s| config.grid.snr_db.iter().map(move |&snr| (s, snr)))
        .collect();
    let per_cell: Vec<Vec<ResultRecord>> = cells
        .par_iter()
        .enumerate()
        .map(|(ci, &(side, snr))| {
            let qam = ConstellationQam::new(side)?;
            let net = PtqNetwork::new(&state, &calib, &Constellation::Qam(qam))?;
            let energy = client_activation_energy(&sizes, qam.total_levels(), ValueKind::Complex)?;
            let mut stream = ChaCha8Rng::seed_from_u64(config.master_seed);
            stream.set_stream(ci as u64 + 1);
            (0..config.seeds)
                .map(|_| {
                    let seed = stream.next_u64();
                    let start = Instant::now();
                    let mut backend = Backend::Iq(NoiseModel::new(snr, seed)?.source());
                    let mut correct = 0usize;
                    for i in 0..test.len() {
                        if net.predict(test.input(i), &mut backend)? == test.labels[i] {
                            correct += 1;
                        }
                    }
                    let acc = correct as f64 / test.len().max(1) as f64;
                    Ok(ResultRecord {
                        experiment_id: id.clone(),
                        variant: Variant::QamNet.name().into(),
                        total_levels: Some(qam.total_levels()),
                        side: Some(side),
                        snr_db: Some(snr),
                        hidden_size: sizes[1],
                        seed,
                        test_accuracy: acc,
                        accuracy_drop_vs_digital: digital - acc,
                        activation_energy: energy,
                        wall_time_s: if config.record_wall_time {
                            start.elapsed().as_secs_f64()
                        } else {
                            0.0
                        },
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let records: Vec<ResultRecord> = per_cell.into_iter().flatten().collect();
    let boundary = boundary_json(config, digital, &records);
    Ok(NoiseGridOutput {
        records,
        digital_accuracy: digital,
        boundary,
    })
}

fn boundary_json(config: &ExperimentConfig, digital: f64, records: &[ResultRecord]) -> Value {
    let threshold = config.noise_grid.threshold_pp;
    let means = cell_means(records);
    let within = |drop: f64| drop * 100.0 <= threshold;
    let cells: Vec<Value> = means
        .iter()
        .map(|m| {
            json!({
                "side": m.side,
                "snr_db": snr_value(m.snr_db.unwrap_or(f64::INFINITY)),
                "mean_drop_pp": m.mean_drop * 100.0,
                "within": within(m.mean_drop),
            })
        })
        .collect();
    let mut sides: Vec<u32> = config.grid.sides.clone();
    sides.dedup();
    let boundary: Vec<Value> = sides
        .iter()
        .map(|&side| {
            let mut col: Vec<(f64, f64)> = means
                .iter()
                .filter(|m| m.side == Some(side))
                .map(|m| (m.snr_db.unwrap_or(f64::INFINITY), m.mean_drop))
                .collect();
            col.sort_by(|a, b| b.0.total_cmp(&a.0));
            let mut lowest = None;
            for (snr, drop) in col {
                if !within(drop) {
                    break;
                }
                lowest = Some(snr);
            }
            json!({ "side": side, "min_snr_db": lowest.map(snr_value) })
        })
        .collect();
    json!({
        "experiment_id": config.experiment_id(),
        "threshold_pp": threshold,
        "digital_accuracy": digital,
        "cells": cells,
        "boundary": boundary,
    })
}

fn compared_variant(kind: ExperimentKind) -> Result<Variant> {
    match kind {
        ExperimentKind::LevelEq => Ok(Variant::LevelEq1D),
        ExperimentKind::HardwareEq => Ok(Variant::HardwareEq1D),
        ExperimentKind::EnergyEq => Ok(Variant::EnergyEq1D),
        other => Err(Error::Config(format!("{} is not an equivalence sweep", other.name()))),
    }
}

struct Job {
    variant: Option<Variant>,
    kind: ValueKind,
    levels: Option<u64>,
    hidden: usize,
    seed_index: usize,
}

/// Trains a QAM network and the configured equivalent 1D ONN for every
/// `N` and hidden size, `seeds` times each. Drops are measured against a
/// full-precision network of the same kind, size and seed.
pub fn run_equivalence_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let other = compared_variant(config.kind)?;
    for &n in &config.grid.levels {
        variant_levels(Variant::QamNet, n)?;
    }
    let (train, test) = config.dataset.as_ref().expect("validated").load()?;
    let seeds: Vec<u64> = (0..config.seeds)
        .map(|s| derive_seed(config.master_seed, s as u64))
        .collect();

    let mut jobs = Vec::new();
    for &n in &config.grid.levels {
        for &h in &config.grid.hidden_sizes {
            for variant in [Variant::QamNet, other] {
                for s in 0..config.seeds {
                    jobs.push(Job {
                        variant: Some(variant),
                        kind: variant.value_kind(),
                        levels: Some(variant_levels(variant, n)?),
                        hidden: h,
                        seed_index: s,
                    });
                }
            }
        }
    }
    let n_measured = jobs.len();
    for &h in &config.grid.hidden_sizes {
        for kind in [ValueKind::Complex, ValueKind::Real] {
            for s in 0..config.seeds {
                jobs.push(Job {
                    variant: None,
                    kind,
                    levels: None,
                    hidden: h,
                    seed_index: s,
                });
            }
        }
    }

    let outcomes: Vec<(f64, f64)> = jobs
        .par_iter()
        .map(|job| {
            let c = match (job.kind, job.levels) {
                (_, None) => Constellation::FullPrecision,
                (ValueKind::Complex, Some(n)) => Constellation::Qam(ConstellationQam::from_total_levels(n)?),
                (ValueKind::Real, Some(n)) => {
                    let levels = u32::try_from(n).map_err(|_| Error::Input(format!("{n} levels is too many")))?;
                    Constellation::Levels(Constellation1D::new(levels)?)
                }
            };
            let t = train_config(config, job.kind, vec![job.hidden], c, seeds[job.seed_index]);
            let start = Instant::now();
            let history = train_on(&t, &train, &test)?;
            let acc = *history.test_accuracy.last().unwrap_or(&0.0);
            Ok((acc, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;

    let reference = |kind: ValueKind, hidden: usize, s: usize| -> f64 {
        let i = jobs[n_measured..]
            .iter()
            .position(|j| j.kind == kind && j.hidden == hidden && j.seed_index == s)
            .expect("reference job exists");
        outcomes[n_measured + i].0
    };
    let id = config.experiment_id();
    jobs[..n_measured]
        .iter()
        .zip(&outcomes)
        .map(|(job, &(acc, secs))| {
            let variant = job.variant.expect("measured jobs carry a variant");
            let levels = job.levels.expect("measured jobs are quantized");
            let sizes = vec![train.input_size(), job.hidden, train.classes];
            Ok(ResultRecord {
                experiment_id: id.clone(),
                variant: variant.name().into(),
                total_levels: Some(levels),
                side: match variant {
                    Variant::QamNet => Some(ConstellationQam::from_total_levels(levels)?.side()),
                    _ => None,
                },
                snr_db: None,
                hidden_size: job.hidden,
                seed: seeds[job.seed_index],
                test_accuracy: acc,
                accuracy_drop_vs_digital: reference(job.kind, job.hidden, job.seed_index) - acc,
                activation_energy: client_activation_energy(&sizes, levels, job.kind)?,
                wall_time_s: if config.record_wall_time { secs } else { 0.0 },
            })
        })
        .collect()
}
