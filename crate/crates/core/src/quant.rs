//! Constellations and uniform quantizers on the fixed dynamic range [-1, 1].
//!
//! A [`Constellation1D`] is the level set of a single amplitude modulator.
//! A [`ConstellationQam`] is the square grid produced by two such modulators
//! driven in quadrature; it quantizes the real and imaginary axes
//! independently with the same per-axis grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distances closer than this to a midpoint count as a tie.
const TIE_TOLERANCE: f64 = 1e-12;

/// Uniform grid of `levels` points spanning [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConstellation1D")]
pub struct Constellation1D {
    levels: u32,
    delta: f64,
}

impl Constellation1D {
    pub fn new(levels: u32) -> Result<Self> {
        Self::with_delta(levels, 1.0)
    }

    pub fn with_delta(levels: u32, delta: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Input(format!(
                "a constellation needs at least 2 levels, got {levels}"
            )));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Input(format!("delta must be positive, got {delta}")));
        }
        Ok(Self { levels, delta })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Distance between neighbouring grid points.
    pub fn step(&self) -> f64 {
        2.0 / f64::from(self.levels - 1)
    }

    /// The `k`-th grid point, `k` in `0..levels`.
    ///
    /// Computed as an integer ratio so that the grid is exactly symmetric.
    pub fn point(&self, k: u32) -> f64 {
        debug_assert!(k < self.levels);
        let span = i64::from(self.levels - 1);
        (2 * i64::from(k) - span) as f64 / span as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.levels).map(|k| self.point(k))
    }

    /// Maximum modulation energy of one value, `((L - 1) / 2)^2 * delta^2`.
    pub fn energy_per_value(&self) -> f64 {
        let half = f64::from(self.levels - 1) / 2.0;
        half * half * self.delta * self.delta
    }

    /// Nearest grid point to `clamp(x, -1, 1)`.
    ///
    /// Ties go to the point of larger magnitude; the tie at exactly 0 (even
    /// level counts) goes to the positive point. `x` must be finite, see
    /// [`quantize_1d`] for the checked entry point.
    pub fn quantize(&self, x: f64) -> f64 {
        let c = x.clamp(-1.0, 1.0);
        let u = (c + 1.0) / self.step();
        let lo = (u.floor() as u32).min(self.levels - 2);
        let (a, b) = (self.point(lo), self.point(lo + 1));
        let (da, db) = (c - a, b - c);
        if (da - db).abs() <= TIE_TOLERANCE {
            if a + b >= 0.0 {
                b
            } else {
                a
            }
        } else if da < db {
            a
        } else {
            b
        }
    }

    /// Per-axis quantization of a complex value on this grid.
    pub fn quantize_complex(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.quantize(z.re), self.quantize(z.im))
    }
}

/// Square QAM constellation: `side` levels per axis, `side^2` symbols.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConstellationQam")]
pub struct ConstellationQam {
    side: u32,
    delta: f64,
}

impl ConstellationQam {
    pub fn new(side: u32) -> Result<Self> {
        Self::with_delta(side, 1.0)
    }

    pub fn with_delta(side: u32, delta: f64) -> Result<Self> {
        Constellation1D::with_delta(side, delta)?;
        Ok(Self { side, delta })
    }

    /// QAM constellation with `total_levels` symbols; must be a perfect square.
    pub fn from_total_levels(total_levels: u64) -> Result<Self> {
        let side = exact_sqrt(total_levels).ok_or_else(|| {
            Error::Input(format!(
                "total level count {total_levels} is not a perfect square"
            ))
        })?;
        let side = u32::try_from(side)
            .map_err(|_| Error::Input(format!("QAM side {side} is too large")))?;
        Self::new(side)
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn total_levels(&self) -> u64 {
        u64::from(self.side) * u64::from(self.side)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The grid shared by the in-phase and quadrature axes.
    pub fn axis(&self) -> Constellation1D {
        Constellation1D {
            levels: self.side,
            delta: self.delta,
        }
    }

    /// Energy of one symbol across both modulators.
    pub fn energy_per_value(&self) -> f64 {
        2.0 * self.axis().energy_per_value()
    }

    pub fn quantize(&self, z: Complex64) -> Complex64 {
        self.axis().quantize_complex(z)
    }

    pub fn symbols(&self) -> impl Iterator<Item = Complex64> + '_ {
        let axis = self.axis();
        (0..self.side).flat_map(move |i| {
            (0..self.side).map(move |q| Complex64::new(axis.point(i), axis.point(q)))
        })
    }
}

fn unit_delta() -> f64 {
    1.0
}

#[derive(Deserialize)]
struct RawConstellation1D {
    levels: u32,
    #[serde(default = "unit_delta")]
    delta: f64,
}

impl TryFrom<RawConstellation1D> for Constellation1D {
    type Error = Error;

    fn try_from(raw: RawConstellation1D) -> Result<Self> {
        Self::with_delta(raw.levels, raw.delta)
    }
}

#[derive(Deserialize)]
struct RawConstellationQam {
    side: u32,
    #[serde(default = "unit_delta")]
    delta: f64,
}

impl TryFrom<RawConstellationQam> for ConstellationQam {
    type Error = Error;

    fn try_from(raw: RawConstellationQam) -> Result<Self> {
        Self::with_delta(raw.side, raw.delta)
    }
}

/// Integer square root if `n` is a perfect square.
pub fn exact_sqrt(n: u64) -> Option<u64> {
    let r = n.isqrt();
    (r * r == n).then_some(r)
}

/// Quantization applied to the operands of a network: off, a single-axis
/// amplitude grid, or a QAM grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constellation {
    FullPrecision,
    Levels(Constellation1D),
    Qam(ConstellationQam),
}

impl Constellation {
    /// The per-axis grid, `None` at full precision.
    pub fn axis(&self) -> Option<Constellation1D> {
        match self {
            Constellation::FullPrecision => None,
            Constellation::Levels(c) => Some(*c),
            Constellation::Qam(c) => Some(c.axis()),
        }
    }

    pub fn total_levels(&self) -> Option<u64> {
        match self {
            Constellation::FullPrecision => None,
            Constellation::Levels(c) => Some(u64::from(c.levels())),
            Constellation::Qam(c) => Some(c.total_levels()),
        }
    }
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("cannot quantize non-finite value {x}")))
    }
}

pub fn quantize_1d(x: f64, c: &Constellation1D) -> Result<f64> {
    check_finite(x)?;
    Ok(c.quantize(x))
}

pub fn quantize_complex(z: Complex64, c: &ConstellationQam) -> Result<Complex64> {
    check_finite(z.re)?;
    check_finite(z.im)?;
    Ok(c.quantize(z))
}

/// Straight-through estimate of dQ/dx: 1 inside [-1, 1], 0 outside.
pub fn ste_gradient(x: f64) -> f64 {
    if (-1.0..=1.0).contains(&x) {
        1.0
    } else {
        0.0
    }
}

/// [`ste_gradient`] applied independently to both axes.
pub fn ste_gradient_complex(z: Complex64) -> Complex64 {
    Complex64::new(ste_gradient(z.re), ste_gradient(z.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1(l: u32) -> Constellation1D {
        Constellation1D::new(l).unwrap()
    }

    /// Nearest point by exhaustive distance comparison; ties prefer the larger
    /// magnitude, then the positive point.
    fn nearest_oracle(x: f64, c: &Constellation1D) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        let mut best = f64::NAN;
        let mut best_d = f64::INFINITY;
        for p in c.points() {
            let d = (p - x).abs();
            let better = d < best_d - 1e-12
                || ((d - best_d).abs() <= 1e-12
                    && (p.abs() > best.abs() || (p.abs() == best.abs() && p > best)));
            if better {
                best = p;
                best_d = d;
            }
        }
        best
    }

    #[test]
    fn grid_points() {
        assert_eq!(c1(3).points().collect::<Vec<_>>(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(c1(2).points().collect::<Vec<_>>(), vec![-1.0, 1.0]);
        assert!(c1(5).points().any(|p| p == 0.0));
        assert!(!c1(4).points().any(|p| p == 0.0));
        assert!(Constellation1D::new(1).is_err());
        assert!(ConstellationQam::new(0).is_err());
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_1d(0.0, &c1(5)).unwrap(), 0.0);
        assert_eq!(quantize_1d(1.7, &c1(3)).unwrap(), 1.0);
        assert_eq!(quantize_1d(0.4, &c1(3)).unwrap(), nearest_oracle(0.4, &c1(3)));
        assert_eq!(quantize_1d(0.4, &c1(3)).unwrap(), 0.0);
        assert_eq!(quantize_1d(0.6, &c1(3)).unwrap(), 1.0);
        assert!(quantize_1d(f64::NAN, &c1(3)).is_err());
        assert!(quantize_1d(f64::INFINITY, &c1(3)).is_err());
    }

    #[test]
    fn ties_round_away_from_zero() {
        assert_eq!(c1(3).quantize(0.5), 1.0);
        assert_eq!(c1(3).quantize(-0.5), -1.0);
        // zero is the midpoint of the two central points for even L
        assert_eq!(c1(4).quantize(0.0), 1.0 / 3.0);
        assert_eq!(c1(2).quantize(0.0), 1.0);
    }

    #[test]
    fn qam_examples() {
        let q5 = ConstellationQam::new(5).unwrap();
        let q3 = ConstellationQam::new(3).unwrap();
        assert_eq!(
            quantize_complex(Complex64::new(0.0, 0.0), &q5).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(
            quantize_complex(Complex64::new(0.4, 0.6), &q3).unwrap(),
            Complex64::new(0.0, 1.0)
        );
        assert_eq!(
            quantize_complex(Complex64::new(2.0, -2.0), &q3).unwrap(),
            Complex64::new(1.0, -1.0)
        );
        assert!(quantize_complex(Complex64::new(0.0, f64::NAN), &q3).is_err());
        assert_eq!(q5.total_levels(), 25);
        assert_eq!(q5.symbols().count(), 25);
    }

    #[test]
    fn qam_matches_componentwise_1d_exhaustively() {
        for side in 2..=8 {
            let q = ConstellationQam::new(side).unwrap();
            let axis = c1(side);
            for i in -60..=60 {
                for j in -60..=60 {
                    let z = Complex64::new(i as f64 / 50.0, j as f64 / 50.0);
                    let got = q.quantize(z);
                    assert_eq!(got, Complex64::new(axis.quantize(z.re), axis.quantize(z.im)));
                    assert_eq!(got.re, nearest_oracle(z.re, &axis), "side {side} x {}", z.re);
                    assert_eq!(got.im, nearest_oracle(z.im, &axis));
                }
            }
        }
    }

    #[test]
    fn energies() {
        assert_eq!(c1(16).energy_per_value(), 56.25);
        assert_eq!(c1(4).energy_per_value(), 2.25);
        assert_eq!(ConstellationQam::new(4).unwrap().energy_per_value(), 4.5);
        assert_eq!(Constellation1D::with_delta(3, 2.0).unwrap().energy_per_value(), 4.0);
    }

    #[test]
    fn from_total_levels() {
        assert_eq!(ConstellationQam::from_total_levels(16).unwrap().side(), 4);
        assert!(ConstellationQam::from_total_levels(15).is_err());
        assert_eq!(exact_sqrt(1 << 40), Some(1 << 20));
    }

    #[test]
    fn ste() {
        assert_eq!(ste_gradient(0.3), 1.0);
        assert_eq!(ste_gradient(-1.0), 1.0);
        assert_eq!(ste_gradient(1.0), 1.0);
        assert_eq!(ste_gradient(1.5), 0.0);
        assert_eq!(
            ste_gradient_complex(Complex64::new(0.2, -3.0)),
            Complex64::new(1.0, 0.0)
        );
    }
}
