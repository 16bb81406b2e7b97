//! Readout noise: zero-mean Gaussian with `sigma_noise = sigma_signal / sqrt(SNR)`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// SNR in dB (`+inf` disables noise) and the seed of the noise stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub snr_db: f64,
    pub rng_seed: u64,
}

impl NoiseModel {
    pub fn new(snr_db: f64, rng_seed: u64) -> Result<Self> {
        if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
            return Err(Error::Input(format!("invalid SNR {snr_db} dB")));
        }
        Ok(Self { snr_db, rng_seed })
    }

    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            rng_seed: 0,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.snr_db == f64::INFINITY
    }

    pub fn snr_linear(&self) -> f64 {
        snr_linear(self.snr_db)
    }

    pub fn source(&self) -> NoiseSource {
        NoiseSource::new(*self)
    }
}

pub fn snr_linear(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// `sigma_signal / sqrt(10^(snr_db / 10))`; zero at infinite SNR.
pub fn noise_sigma(sigma_signal: f64, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        sigma_signal / snr_linear(snr_db).sqrt()
    }
}

/// A [`NoiseModel`] with its seeded random stream.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    model: NoiseModel,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(model: NoiseModel) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(model.rng_seed),
        }
    }

    pub fn noiseless() -> Self {
        Self::new(NoiseModel::noiseless())
    }

    pub fn model(&self) -> NoiseModel {
        self.model
    }

    pub fn is_noiseless(&self) -> bool {
        self.model.is_noiseless()
    }

    /// Perturbs one readout whose signal level is `sigma_signal`.
    pub fn perturb(&mut self, value: f64, sigma_signal: f64) -> f64 {
        if self.is_noiseless() {
            return value;
        }
        let sigma = noise_sigma(sigma_signal, self.model.snr_db);
        let z: f64 = StandardNormal.sample(&mut self.rng);
        value + sigma * z
    }

    /// Noise on a real output vector, see [`apply_noise`].
    pub fn apply(&mut self, values: &[f64]) -> Result<NoisyReadout<f64>> {
        apply_noise(values, self.model.snr_db, &mut self.rng)
    }

    /// Noise on a complex output vector, see [`apply_noise_complex`].
    pub fn apply_complex(&mut self, values: &[Complex64]) -> Result<NoisyReadout<Complex64>> {
        apply_noise_complex(values, self.model.snr_db, &mut self.rng)
    }
}

/// Perturbed readouts together with the noise level that was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyReadout<T> {
    pub values: Vec<T>,
    pub sigma_signal: f64,
    pub sigma_noise: f64,
    /// Linear SNR below 1: the noise dominates the signal.
    pub below_unity_snr: bool,
}

pub fn population_std(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return 0.0;
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    var.sqrt()
}

fn check_snr(snr_db: f64) -> Result<()> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        Err(Error::Input(format!("invalid SNR {snr_db} dB")))
    } else {
        Ok(())
    }
}

/// Adds i.i.d. `N(0, sigma_noise^2)` noise to every element of one
/// matrix-vector product output, where `sigma_signal` is the population
/// standard deviation of `values` before noise.
pub fn apply_noise<R: Rng + ?Sized>(
    values: &[f64],
    snr_db: f64,
    rng: &mut R,
) -> Result<NoisyReadout<f64>> {
    check_snr(snr_db)?;
    if values.is_empty() {
        return Err(Error::Input("cannot apply noise to an empty vector".into()));
    }
    let sigma_signal = population_std(values.iter().copied());
    let sigma_noise = noise_sigma(sigma_signal, snr_db);
    let values = if snr_db == f64::INFINITY {
        values.to_vec()
    } else {
        values
            .iter()
            .map(|&v| {
                let z: f64 = StandardNormal.sample(rng);
                v + sigma_noise * z
            })
            .collect()
    };
    Ok(NoisyReadout {
        values,
        sigma_signal,
        sigma_noise,
        below_unity_snr: snr_db < 0.0,
    })
}

/// Complex variant of [`apply_noise`]: the real and imaginary readouts get
/// independent draws, and `sigma_signal` is pooled over both components.
pub fn apply_noise_complex<R: Rng + ?Sized>(
    values: &[Complex64],
    snr_db: f64,
    rng: &mut R,
) -> Result<NoisyReadout<Complex64>> {
    check_snr(snr_db)?;
    if values.is_empty() {
        return Err(Error::Input("cannot apply noise to an empty vector".into()));
    }
    let sigma_signal = population_std(values.iter().flat_map(|z| [z.re, z.im]));
    let sigma_noise = noise_sigma(sigma_signal, snr_db);
    let values = if snr_db == f64::INFINITY {
        values.to_vec()
    } else {
        values
            .iter()
            .map(|&v| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                v + Complex64::new(re, im) * sigma_noise
            })
            .collect()
    };
    Ok(NoisyReadout {
        values,
        sigma_signal,
        sigma_noise,
        below_unity_snr: snr_db < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_snr_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = [0.5, -2.0, 3.25];
        let out = apply_noise(&v, f64::INFINITY, &mut rng).unwrap();
        assert_eq!(out.values, v);
        assert_eq!(out.sigma_noise, 0.0);
    }

    #[test]
    fn twenty_db_is_a_tenth() {
        assert!((noise_sigma(1.0, 20.0) - 0.1).abs() < 1e-15);
        assert!((snr_linear(20.0).sqrt() - 10.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = apply_noise(&[1.0, -1.0], 20.0, &mut rng).unwrap();
        assert_eq!(out.sigma_signal, 1.0);
        assert!((out.sigma_noise - 0.1).abs() < 1e-15);
    }

    #[test]
    fn seeded_draws_are_reproducible() {
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            apply_noise(&[1.0, -1.0], 10.0, &mut rng).unwrap().values
        };
        let (a, b) = (run(), run());
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[1].to_bits(), b[1].to_bits());
    }

    #[test]
    fn low_snr_is_flagged_not_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = apply_noise(&[1.0, 2.0], -3.0, &mut rng).unwrap();
        assert!(out.below_unity_snr);
        let out = apply_noise(&[1.0, 2.0], 3.0, &mut rng).unwrap();
        assert!(!out.below_unity_snr);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(apply_noise(&[], 10.0, &mut rng).is_err());
        assert!(apply_noise(&[1.0], f64::NAN, &mut rng).is_err());
        assert!(NoiseModel::new(f64::NEG_INFINITY, 0).is_err());
    }

    #[test]
    fn complex_noise_uses_independent_axes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<Complex64> = (0..20_000)
            .map(|k| Complex64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let out = apply_noise_complex(&v, 0.0, &mut rng).unwrap();
        // pooled over re and im: re = +-1, im = 0
        assert!((out.sigma_signal - 0.5f64.sqrt()).abs() < 1e-12);
        let (mut cov, mut vr, mut vi) = (0.0, 0.0, 0.0);
        for (a, b) in out.values.iter().zip(&v) {
            let d = a - b;
            cov += d.re * d.im;
            vr += d.re * d.re;
            vi += d.im * d.im;
        }
        let corr = cov / (vr * vi).sqrt();
        assert!(corr.abs() < 0.03, "correlation {corr}");
        let n = v.len() as f64;
        assert!(((vr / n).sqrt() / out.sigma_noise - 1.0).abs() < 0.03);
        assert!(((vi / n).sqrt() / out.sigma_noise - 1.0).abs() < 0.03);
    }
}
