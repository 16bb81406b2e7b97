//! Synthetic modulation-classification task: random symbol streams from a
//! fixed catalog of formats, unit power, complex AWGN.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SEQUENCE_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Psk8,
    Qam16,
    Pam4,
    Psk16,
    Qam64,
    Pam8,
}

/// Class id order; the first `k` entries form a `k`-class task.
pub const CATALOG: [Modulation; 8] = [
    Modulation::Bpsk,
    Modulation::Qpsk,
    Modulation::Psk8,
    Modulation::Qam16,
    Modulation::Pam4,
    Modulation::Psk16,
    Modulation::Qam64,
    Modulation::Pam8,
];

fn psk(m: usize, offset: f64) -> Vec<Complex64> {
    (0..m)
        .map(|k| Complex64::from_polar(1.0, offset + 2.0 * PI * k as f64 / m as f64))
        .collect()
}

fn pam(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| Complex64::new((2 * k) as f64 - (m - 1) as f64, 0.0))
        .collect()
}

fn square_qam(side: usize) -> Vec<Complex64> {
    let axis = pam(side);
    axis.iter()
        .flat_map(|re| axis.iter().map(move |im| Complex64::new(re.re, im.re)))
        .collect()
}

fn unit_power(points: Vec<Complex64>) -> Vec<Complex64> {
    let p = points.iter().map(|z| z.norm_sqr()).sum::<f64>() / points.len() as f64;
    points.into_iter().map(|z| z / p.sqrt()).collect()
}

impl Modulation {
    pub fn from_class(id: usize) -> Result<Self> {
        CATALOG
            .get(id)
            .copied()
            .ok_or_else(|| Error::Input(format!("unknown modulation class {id} (catalog has {})", CATALOG.len())))
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
            Modulation::Psk8 => "8PSK",
            Modulation::Qam16 => "16QAM",
            Modulation::Pam4 => "4PAM",
            Modulation::Psk16 => "16PSK",
            Modulation::Qam64 => "64QAM",
            Modulation::Pam8 => "8PAM",
        }
    }

    /// Symbol alphabet with unit average power.
    pub fn symbols(self) -> Vec<Complex64> {
        unit_power(match self {
            Modulation::Bpsk => pam(2),
            Modulation::Qpsk => psk(4, PI / 4.0),
            Modulation::Psk8 => psk(8, 0.0),
            Modulation::Qam16 => square_qam(4),
            Modulation::Pam4 => pam(4),
            Modulation::Psk16 => psk(16, 0.0),
            Modulation::Qam64 => square_qam(8),
            Modulation::Pam8 => pam(8),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfDataset {
    pub sequences: Vec<Vec<Complex64>>,
    pub labels: Vec<usize>,
    pub snr_db: Vec<f64>,
}

impl RfDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sequence_len(&self) -> usize {
        self.sequences.first().map_or(0, Vec::len)
    }

    pub fn classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }
}

/// `n_per_class` sequences per class, grouped by class in id order.
pub fn generate_rf_dataset(
    k_classes: usize,
    n_per_class: usize,
    seq_len: usize,
    channel_snr_db: f64,
    seed: u64,
) -> Result<RfDataset> {
    if !(2..=CATALOG.len()).contains(&k_classes) {
        return Err(Error::Input(format!(
            "class count {k_classes} outside 2..={}",
            CATALOG.len()
        )));
    }
    if seq_len == 0 {
        return Err(Error::Input("sequence length must be positive".into()));
    }
    if channel_snr_db.is_nan() || channel_snr_db == f64::NEG_INFINITY {
        return Err(Error::Input(format!("channel SNR {channel_snr_db} dB is not usable")));
    }
    let sigma_axis = if channel_snr_db == f64::INFINITY {
        0.0
    } else {
        (0.5 / 10f64.powf(channel_snr_db / 10.0)).sqrt()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = k_classes * n_per_class;
    let mut out = RfDataset {
        sequences: Vec::with_capacity(n),
        labels: Vec::with_capacity(n),
        snr_db: vec![channel_snr_db; n],
    };
    for class in 0..k_classes {
        let alphabet = Modulation::from_class(class)?.symbols();
        for _ in 0..n_per_class {
            let seq = (0..seq_len)
                .map(|_| {
                    let s = alphabet[rng.random_range(0..alphabet.len())];
                    if sigma_axis == 0.0 {
                        s
                    } else {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        s + Complex64::new(re, im) * sigma_axis
                    }
                })
                .collect();
            out.sequences.push(seq);
            out.labels.push(class);
        }
    }
    Ok(out)
}

/// Network input for an RF sequence: halved second and fourth powers of
/// each sample, concatenated (length `2T`).
pub fn rf_features(seq: &[Complex64]) -> Vec<Complex64> {
    let sq: Vec<Complex64> = seq.iter().map(|x| x * x).collect();
    sq.iter()
        .map(|s| s * 0.5)
        .chain(sq.iter().map(|s| s * s * 0.5))
        .collect()
}

pub fn write_rf_csv(path: impl AsRef<Path>, data: &RfDataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
    let t = data.sequence_len();
    let mut header = vec!["label".to_string(), "snr_db".to_string()];
    for i in 0..t {
        header.push(format!("re{i}"));
        header.push(format!("im{i}"));
    }
    w.write_record(&header)?;
    for ((seq, label), snr) in data.sequences.iter().zip(&data.labels).zip(&data.snr_db) {
        let mut row = vec![label.to_string(), snr.to_string()];
        for z in seq {
            row.push(z.re.to_string());
            row.push(z.im.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rf_csv(path: impl AsRef<Path>) -> Result<RfDataset> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Serde(format!("{}: {e}", path.display())))?;
    let width = r.headers()?.len();
    if width < 4 || width % 2 != 0 {
        return Err(Error::Serde(format!("{}: RF CSV has {width} columns", path.display())));
    }
    let mut out = RfDataset {
        sequences: Vec::new(),
        labels: Vec::new(),
        snr_db: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::Serde(format!("{}: bad number {:?}", path.display(), &rec[i])))
        };
        out.labels.push(
            rec[0]
                .parse()
                .map_err(|_| Error::Serde(format!("{}: bad label {:?}", path.display(), &rec[0])))?,
        );
        out.snr_db.push(num(1)?);
        out.sequences.push(
            (2..width)
                .step_by(2)
                .map(|i| Ok(Complex64::new(num(i)?, num(i + 1)?)))
                .collect::<Result<_>>()?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabets_have_unit_power() {
        for m in CATALOG {
            let s = m.symbols();
            let p = s.iter().map(|z| z.norm_sqr()).sum::<f64>() / s.len() as f64;
            assert!((p - 1.0).abs() < 1e-12, "{}", m.name());
        }
    }

    #[test]
    fn noiseless_bpsk_is_plus_minus_one() {
        let d = generate_rf_dataset(2, 20, 32, f64::INFINITY, 1).unwrap();
        for (seq, &l) in d.sequences.iter().zip(&d.labels) {
            if l == 0 {
                assert!(seq.iter().all(|z| z.im == 0.0 && (z.re == 1.0 || z.re == -1.0)));
            }
        }
    }

    #[test]
    fn labels_balanced_and_seeded() {
        let a = generate_rf_dataset(4, 7, 16, 10.0, 5).unwrap();
        for c in 0..4 {
            assert_eq!(a.labels.iter().filter(|&&l| l == c).count(), 7);
        }
        assert_eq!(a, generate_rf_dataset(4, 7, 16, 10.0, 5).unwrap());
        assert_ne!(a, generate_rf_dataset(4, 7, 16, 10.0, 6).unwrap());
    }

    #[test]
    fn noise_power_matches_snr() {
        let d = generate_rf_dataset(2, 200, 64, 10.0, 9).unwrap();
        let total: f64 = d.sequences.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
        let n = (d.len() * 64) as f64;
        assert!((total / n - 1.1).abs() < 0.03, "{}", total / n);
    }

    #[test]
    fn bad_class_counts() {
        assert!(generate_rf_dataset(1, 5, 8, 0.0, 0).is_err());
        assert!(generate_rf_dataset(9, 5, 8, 0.0, 0).is_err());
        assert!(Modulation::from_class(8).is_err());
    }

    #[test]
    fn features_of_qpsk_fourth_power_are_constant() {
        let f = rf_features(&Modulation::Qpsk.symbols());
        assert_eq!(f.len(), 8);
        for z in &f[4..] {
            assert!((z - Complex64::new(-0.5, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn csv_round_trip() {
        let d = generate_rf_dataset(3, 4, 5, f64::INFINITY, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rf.csv");
        write_rf_csv(&p, &d).unwrap();
        assert_eq!(read_rf_csv(&p).unwrap(), d);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("label,snr_db,re0,im0,re1,im1"));
    }
}
