//! Complex inner-product engines built from mixers, plus the amplitude-only
//! baseline and the rolled real dot product.

use num_complex::Complex64;

use super::mixer::{MixerConfig, PhaseShift};
use super::noise::NoiseSource;
use crate::error::{Error, Result};
use crate::quant::{Constellation1D, ConstellationQam};

/// Raw balanced-detection charge per unit product. The engines divide it out.
pub const OPTICAL_GAIN: f64 = 2.0;

const REAL_PATH: MixerConfig = MixerConfig::new(PhaseShift::Zero);
const QUADRATURE_PATH: MixerConfig = MixerConfig::new(PhaseShift::HalfPi);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineDesign {
    /// Two I/Q modulators feeding a 0 and a pi/2 mixer.
    Iq,
    /// Four amplitude mixers, one per partial product.
    FourEngine,
    /// Two amplitude mixers reused over two timesteps.
    TwoMixer,
}

/// Hardware cost of one complex multiply-accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineResources {
    pub modulators: u32,
    pub mixers: u32,
    pub timesteps: u32,
}

pub fn engine_resources(design: EngineDesign) -> EngineResources {
    let (modulators, mixers, timesteps) = match design {
        EngineDesign::Iq => (4, 2, 1),
        EngineDesign::FourEngine => (4, 4, 1),
        EngineDesign::TwoMixer => (3, 2, 2),
    };
    EngineResources {
        modulators,
        mixers,
        timesteps,
    }
}

/// Capacitor charges of both I/Q paths for `w . x*`, gain removed.
///
/// The pi/2 path measures `sum 2 (w_r x_i - w_i x_r) = -2 Im(w . x*)`, so its
/// detectors are read with the opposite polarity (`I- - I+`).
pub(crate) fn iq_charges(w: &[Complex64], x: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (&wj, &xj) in w.iter().zip(x) {
        re += REAL_PATH.photocurrents(wj, xj).balanced();
        im -= QUADRATURE_PATH.photocurrents(wj, xj).balanced();
    }
    Complex64::new(re / OPTICAL_GAIN, im / OPTICAL_GAIN)
}

/// Charge of a single-axis amplitude mixer for real operands, gain removed.
pub(crate) fn amplitude_charge(w: &[f64], x: &[f64]) -> f64 {
    let acc: f64 = w
        .iter()
        .zip(x)
        .map(|(&a, &b)| {
            REAL_PATH
                .photocurrents(Complex64::new(a, 0.0), Complex64::new(b, 0.0))
                .balanced()
        })
        .sum();
    acc / OPTICAL_GAIN
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Input(format!("vector length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::Input("inner product of empty vectors".into()));
    }
    Ok(())
}

/// Signal level used for a lone scalar readout: the RMS of its accumulators.
fn scalar_level(z: Complex64) -> f64 {
    (z.norm_sqr() / 2.0).sqrt()
}

/// Complex inner product `sum_j w_j conj(x_j)` on the I/Q photoelectric
/// multiplier: one timestep per element, both operands optionally snapped
/// to the QAM constellation, noise added once to each accumulated readout.
pub fn iq_inner_product(
    w: &[Complex64],
    x: &[Complex64],
    quant: Option<&ConstellationQam>,
    noise: &mut NoiseSource,
) -> Result<Complex64> {
    check_lengths(w.len(), x.len())?;
    let charge = match quant {
        Some(q) => {
            let wq: Vec<_> = w.iter().map(|&v| q.quantize(v)).collect();
            let xq: Vec<_> = x.iter().map(|&v| q.quantize(v)).collect();
            iq_charges(&wq, &xq)
        }
        None => iq_charges(w, x),
    };
    if noise.is_noiseless() {
        return Ok(charge);
    }
    let level = scalar_level(charge);
    Ok(Complex64::new(
        noise.perturb(charge.re, level),
        noise.perturb(charge.im, level),
    ))
}

/// Real dot product on a single amplitude-modulation axis (1D ONN).
pub fn amplitude_inner_product(
    w: &[f64],
    x: &[f64],
    quant: Option<&Constellation1D>,
    noise: &mut NoiseSource,
) -> Result<f64> {
    check_lengths(w.len(), x.len())?;
    let charge = match quant {
        Some(q) => {
            let wq: Vec<_> = w.iter().map(|&v| q.quantize(v)).collect();
            let xq: Vec<_> = x.iter().map(|&v| q.quantize(v)).collect();
            amplitude_charge(&wq, &xq)
        }
        None => amplitude_charge(w, x),
    };
    Ok(noise.perturb(charge, charge.abs()))
}

/// Packs consecutive pairs `(v[2i], v[2i+1])` into complex values, padding an
/// odd tail with zero.
pub fn roll_pairs(v: &[f64]) -> Vec<Complex64> {
    v.chunks(2)
        .map(|c| Complex64::new(c[0], c.get(1).copied().unwrap_or(0.0)))
        .collect()
}

/// Real dot product computed on the I/Q engine in `ceil(n / 2)` timesteps.
pub fn rolled_real_inner_product(
    a: &[f64],
    b: &[f64],
    noise: &mut NoiseSource,
) -> Result<(f64, usize)> {
    check_lengths(a.len(), b.len())?;
    let (ra, rb) = (roll_pairs(a), roll_pairs(b));
    let value = iq_inner_product(&ra, &rb, None, noise)?;
    Ok((value.re, ra.len()))
}

/// Product of real amplitudes `p`, `q` read from one zero-shift mixer.
fn amplitude_mixer(p: Complex64, q: Complex64) -> f64 {
    REAL_PATH.photocurrents(p, q).balanced() / OPTICAL_GAIN
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// `w * conj(x)` from four amplitude mixers holding ac, bd, -ad and bc
/// (`w = a + ib`, `x = c + id`). The minus sign comes from a pi phase
/// shift on the beam carrying `Im(x)` into the third mixer.
pub fn four_engine_product(w: Complex64, x: Complex64) -> Complex64 {
    let (a, b, c, d) = (w.re, w.im, x.re, x.im);
    let pi_shift = Complex64::new(-1.0, 0.0);
    let ac = amplitude_mixer(re(a), re(c));
    let bd = amplitude_mixer(re(b), re(d));
    let neg_ad = amplitude_mixer(re(a), re(d) * pi_shift);
    let bc = amplitude_mixer(re(b), re(c));
    Complex64::new(ac + bd, bc + neg_ad)
}

/// `w * conj(x)` from two mixers and three modulators: the input modulator
/// sends `Re(x)` in the first timestep and `Im(x)` in the second, while the
/// weight modulators hold `Re(w)` and `Im(w)`.
pub fn two_mixer_product(w: Complex64, x: Complex64) -> (Complex64, u32) {
    let (mut re_acc, mut im_acc) = (0.0, 0.0);
    // timestep 1: x.re
    let m_a = amplitude_mixer(re(w.re), re(x.re));
    let m_b = amplitude_mixer(re(w.im), re(x.re));
    re_acc += m_a;
    im_acc += m_b;
    // timestep 2: x.im, first mixer accumulated with inverted polarity
    let m_a = amplitude_mixer(re(w.re), re(x.im));
    let m_b = amplitude_mixer(re(w.im), re(x.im));
    re_acc += m_b;
    im_acc -= m_a;
    (Complex64::new(re_acc, im_acc), 2)
}
