//! Homodyne mixer: optional input phase shift, 50:50 beamsplitter and a pair
//! of photodetectors whose difference current is integrated on a capacitor.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

/// Phase shift applied to the first (weight) input port of a mixer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseShift {
    Zero,
    HalfPi,
}

impl PhaseShift {
    /// `exp(i * phi)`, written out exactly.
    pub fn factor(self) -> Complex64 {
        match self {
            PhaseShift::Zero => Complex64::new(1.0, 0.0),
            PhaseShift::HalfPi => Complex64::new(0.0, 1.0),
        }
    }

    pub fn radians(self) -> f64 {
        match self {
            PhaseShift::Zero => 0.0,
            PhaseShift::HalfPi => std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Amplitude/phase view of a complex envelope `I + iQ` on a symbolic carrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phasor {
    pub amplitude: f64,
    pub phase: f64,
}

impl Phasor {
    pub fn from_envelope(z: Complex64) -> Self {
        Self {
            amplitude: z.re.hypot(z.im),
            phase: z.im.atan2(z.re),
        }
    }

    pub fn to_envelope(self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixerConfig {
    pub input_phase_shift: PhaseShift,
}

impl MixerConfig {
    pub const fn new(input_phase_shift: PhaseShift) -> Self {
        Self { input_phase_shift }
    }

    /// The beamsplitter transfer matrix `(1/sqrt 2) [[1, 1], [1, -1]]`.
    pub fn transfer(&self) -> [[Complex64; 2]; 2] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        [[h, h], [h, -h]]
    }

    /// Output fields for inputs `(s1, s2)`, phase shift applied to `s1`.
    pub fn output_fields(&self, s1: Complex64, s2: Complex64) -> [Complex64; 2] {
        let a = s1 * self.input_phase_shift.factor();
        let t = self.transfer();
        [t[0][0] * a + t[0][1] * s2, t[1][0] * a + t[1][1] * s2]
    }

    /// Squared output magnitudes, evaluated as `|a ± s2|^2 / 2` (the
    /// transfer matrix with its `1/√2` factored out) so that exact inputs
    /// give exact currents.
    pub fn photocurrents(&self, s1: Complex64, s2: Complex64) -> Photocurrents {
        let a = s1 * self.input_phase_shift.factor();
        Photocurrents {
            plus: 0.5 * (a + s2).norm_sqr(),
            minus: 0.5 * (a - s2).norm_sqr(),
        }
    }
}

/// Photocurrents at the two output ports of a mixer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Photocurrents {
    pub plus: f64,
    pub minus: f64,
}

impl Photocurrents {
    /// Balanced-detection difference current `I+ - I-`.
    pub fn balanced(&self) -> f64 {
        self.plus - self.minus
    }

    pub fn total(&self) -> f64 {
        self.plus + self.minus
    }
}

/// Photocurrents produced by interfering `s1` (after `phase_shift`) with `s2`.
///
/// Each current is the squared magnitude of one beamsplitter output, i.e.
/// half the squared norm of `s1 e^{i phi} +/- s2`.
pub fn mixer_photocurrents(s1: Complex64, s2: Complex64, phase_shift: PhaseShift) -> Photocurrents {
    MixerConfig::new(phase_shift).photocurrents(s1, s2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn transfer_is_unitary() {
        for shift in [PhaseShift::Zero, PhaseShift::HalfPi] {
            let t = MixerConfig::new(shift).transfer();
            for i in 0..2 {
                for j in 0..2 {
                    let dot: Complex64 = (0..2).map(|k| t[i][k] * t[j][k].conj()).sum();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(dot.re, expected, epsilon = 1e-15);
                    assert_abs_diff_eq!(dot.im, 0.0, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn photocurrents_equal_output_field_power() {
        let (s1, s2) = (c(0.4, -1.1), c(-0.6, 0.2));
        for shift in [PhaseShift::Zero, PhaseShift::HalfPi] {
            let m = MixerConfig::new(shift);
            let [e1, e2] = m.output_fields(s1, s2);
            let p = m.photocurrents(s1, s2);
            assert_abs_diff_eq!(p.plus, e1.norm_sqr(), epsilon = 1e-14);
            assert_abs_diff_eq!(p.minus, e2.norm_sqr(), epsilon = 1e-14);
        }
    }

    #[test]
    fn photocurrent_examples() {
        let p = mixer_photocurrents(c(1.0, 0.0), c(0.0, 1.0), PhaseShift::HalfPi);
        assert_abs_diff_eq!(p.plus, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.minus, 0.0, epsilon = 1e-12);

        for shift in [PhaseShift::Zero, PhaseShift::HalfPi] {
            let p = mixer_photocurrents(c(0.0, 0.0), c(0.0, 0.0), shift);
            assert_eq!((p.plus, p.minus), (0.0, 0.0));
        }

        let p = mixer_photocurrents(c(1.0, 0.0), c(1.0, 0.0), PhaseShift::Zero);
        assert_abs_diff_eq!(p.balanced(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn matches_closed_form_photocurrents() {
        // I+ = 1/2 |x_r - w_i + i(w_r + x_i)|^2, I- = 1/2 |-x_r - w_i + i(w_r - x_i)|^2
        let (w, x) = (c(0.3, -0.7), c(-0.2, 0.9));
        let p = mixer_photocurrents(w, x, PhaseShift::HalfPi);
        let plus = 0.5 * c(x.re - w.im, w.re + x.im).norm_sqr();
        let minus = 0.5 * c(-x.re - w.im, w.re - x.im).norm_sqr();
        assert_abs_diff_eq!(p.plus, plus, epsilon = 1e-14);
        assert_abs_diff_eq!(p.minus, minus, epsilon = 1e-14);
        // the shifted path measures 2(w_r x_i - w_i x_r) = -2 Im(w x*)
        assert_abs_diff_eq!(p.balanced(), -2.0 * (w * x.conj()).im, epsilon = 1e-14);
    }

    #[test]
    fn phasor_round_trip() {
        for z in [c(1.0, 0.0), c(-0.5, 0.25), c(0.0, -1.0), c(3.0, 4.0)] {
            let p = Phasor::from_envelope(z);
            let back = p.to_envelope();
            assert_abs_diff_eq!(back.re, z.re, epsilon = 1e-15);
            assert_abs_diff_eq!(back.im, z.im, epsilon = 1e-15);
        }
        assert_eq!(Phasor::from_envelope(c(3.0, 4.0)).amplitude, 5.0);
    }
}
