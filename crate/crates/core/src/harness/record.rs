use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{equivalence_table, EquivalenceRow};
use crate::error::{Error, Result};

/// One (cell, seed) outcome. Accuracies and drops are fractions in [0, 1];
/// an empty `side` or `snr_db` means the field does not apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub variant: String,
    pub total_levels: Option<u64>,
    pub side: Option<u32>,
    pub snr_db: Option<f64>,
    pub hidden_size: usize,
    pub seed: u64,
    pub test_accuracy: f64,
    pub accuracy_drop_vs_digital: f64,
    pub activation_energy: f64,
    pub wall_time_s: f64,
}

pub const RESULT_COLUMNS: [&str; 11] = [
    "experiment_id",
    "variant",
    "total_levels",
    "side",
    "snr_db",
    "hidden_size",
    "seed",
    "test_accuracy",
    "accuracy_drop_vs_digital",
    "activation_energy",
    "wall_time_s",
];

pub const ENERGY_COLUMNS: [&str; 5] = [
    "variant",
    "total_levels",
    "bits_per_value",
    "weight_values",
    "energy_per_value",
];

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let mut inner = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    inner.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Serde(format!(
            "{}: header {found:?} does not match {header:?}",
            path.display()
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Writes records under the fixed header; an empty slice gives a
/// header-only file.
pub fn emit_csv(records: &[ResultRecord], path: impl AsRef<Path>) -> Result<()> {
    write_rows(path.as_ref(), &RESULT_COLUMNS, records)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    read_rows(path.as_ref(), &RESULT_COLUMNS)
}

/// Equivalence rows for every `N`, four variants each.
pub fn energy_table_rows(levels: &[u64], input_side: u64, hidden: u64, classes: u64) -> Result<Vec<EquivalenceRow>> {
    let mut rows = Vec::with_capacity(4 * levels.len());
    for &n in levels {
        rows.extend(equivalence_table(n, input_side, hidden, classes)?);
    }
    Ok(rows)
}

/// Writes the equivalence table for each `N` in `levels`; `sizes` is
/// `(input side w, hidden h, classes c)`.
pub fn emit_energy_table(levels: &[u64], sizes: (u64, u64, u64), path: impl AsRef<Path>) -> Result<Vec<EquivalenceRow>> {
    let rows = energy_table_rows(levels, sizes.0, sizes.1, sizes.2)?;
    write_rows(path.as_ref(), &ENERGY_COLUMNS, &rows)?;
    Ok(rows)
}

pub fn read_energy_table(path: impl AsRef<Path>) -> Result<Vec<EquivalenceRow>> {
    read_rows(path.as_ref(), &ENERGY_COLUMNS)
}

/// Mean over seeds of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMean {
    pub variant: String,
    pub total_levels: Option<u64>,
    pub side: Option<u32>,
    pub snr_db: Option<f64>,
    pub hidden_size: usize,
    pub seeds: usize,
    pub mean_accuracy: f64,
    pub mean_drop: f64,
    pub activation_energy: f64,
}

/// Variant, levels, side, SNR bits and hidden size.
type CellKey = (String, Option<u64>, Option<u32>, Option<u64>, usize);

/// Averages records sharing variant, levels, side, SNR and hidden size,
/// keeping the order in which cells first appear.
pub fn cell_means(records: &[ResultRecord]) -> Vec<CellMean> {
    let mut order: Vec<CellMean> = Vec::new();
    let mut index: BTreeMap<CellKey, usize> = BTreeMap::new();
    for r in records {
        let key = (
            r.variant.clone(),
            r.total_levels,
            r.side,
            r.snr_db.map(f64::to_bits),
            r.hidden_size,
        );
        let i = *index.entry(key).or_insert_with(|| {
            order.push(CellMean {
                variant: r.variant.clone(),
                total_levels: r.total_levels,
                side: r.side,
                snr_db: r.snr_db,
                hidden_size: r.hidden_size,
                seeds: 0,
                mean_accuracy: 0.0,
                mean_drop: 0.0,
                activation_energy: r.activation_energy,
            });
            order.len() - 1
        });
        let c = &mut order[i];
        c.seeds += 1;
        c.mean_accuracy += r.test_accuracy;
        c.mean_drop += r.accuracy_drop_vs_digital;
    }
    for c in &mut order {
        c.mean_accuracy /= c.seeds as f64;
        c.mean_drop /= c.seeds as f64;
    }
    order
}
