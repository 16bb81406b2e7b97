//! Level, hardware and energy equivalences between QAM networks and 1D
//! ONNs, and the activation energy an edge client spends modulating.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ValueKind;
use crate::quant::exact_sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "QAMNet")]
    QamNet,
    LevelEq1D,
    HardwareEq1D,
    EnergyEq1D,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::QamNet,
        Variant::LevelEq1D,
        Variant::HardwareEq1D,
        Variant::EnergyEq1D,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::QamNet => "QAMNet",
            Variant::LevelEq1D => "LevelEq1D",
            Variant::HardwareEq1D => "HardwareEq1D",
            Variant::EnergyEq1D => "EnergyEq1D",
        }
    }

    pub fn value_kind(self) -> ValueKind {
        match self {
            Variant::QamNet => ValueKind::Complex,
            _ => ValueKind::Real,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown variant {s:?}")))
    }
}

/// One column of the equivalence table. For the energy-equivalent 1D ONN
/// `energy_per_value` is the target it must reach, the QAM symbol energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub variant: Variant,
    pub total_levels: u64,
    pub bits_per_value: f64,
    pub weight_values: u64,
    pub energy_per_value: f64,
}

fn qam_side(n: u64) -> Result<u64> {
    match exact_sqrt(n) {
        Some(s) if s >= 2 => Ok(s),
        _ => Err(Error::Input(format!(
            "total level count {n} is not a perfect square of at least 4"
        ))),
    }
}

/// `((levels - 1) / 2)^2`, the peak energy of one amplitude in units of Δ².
pub fn axis_energy(levels: u64) -> f64 {
    let half = (levels - 1) as f64 / 2.0;
    half * half
}

fn ceil_sqrt(x: u64) -> u64 {
    let r = x.isqrt();
    if r * r == x {
        r
    } else {
        r + 1
    }
}

/// Levels a 1D ONN needs to spend at least the energy of one QAM symbol
/// with `n` total levels.
pub fn energy_equivalent_levels(n: u64) -> Result<u64> {
    let s = qam_side(n)?;
    Ok(ceil_sqrt(2 * (s - 1) * (s - 1)) + 1)
}

/// Total levels of the 1D ONN compared against a QAM network with `n`
/// total levels, or `n` itself for [`Variant::QamNet`].
pub fn variant_levels(variant: Variant, n: u64) -> Result<u64> {
    let s = qam_side(n)?;
    Ok(match variant {
        Variant::QamNet | Variant::LevelEq1D => n,
        Variant::HardwareEq1D => s,
        Variant::EnergyEq1D => energy_equivalent_levels(n)?,
    })
}

/// The four variants for a network with a `w x w` input, `h` hidden
/// neurons and `c` classes.
pub fn equivalence_table(n: u64, w: u64, h: u64, c: u64) -> Result<[EquivalenceRow; 4]> {
    let s = qam_side(n)?;
    if w == 0 || h == 0 || c == 0 {
        return Err(Error::Input("network sizes must be positive".into()));
    }
    let real_values = w * w * h + h + h * c + c;
    let qam_axis = axis_energy(s);
    let log2 = |x: u64| (x as f64).log2();
    let energy_levels = energy_equivalent_levels(n)?;
    Ok([
        EquivalenceRow {
            variant: Variant::QamNet,
            total_levels: n,
            bits_per_value: log2(n) / 2.0,
            weight_values: 2 * real_values,
            energy_per_value: qam_axis,
        },
        EquivalenceRow {
            variant: Variant::LevelEq1D,
            total_levels: n,
            bits_per_value: log2(n),
            weight_values: real_values,
            energy_per_value: axis_energy(n),
        },
        EquivalenceRow {
            variant: Variant::HardwareEq1D,
            total_levels: s,
            bits_per_value: log2(n) / 2.0,
            weight_values: real_values,
            energy_per_value: qam_axis,
        },
        EquivalenceRow {
            variant: Variant::EnergyEq1D,
            total_levels: energy_levels,
            bits_per_value: log2(energy_levels),
            weight_values: real_values,
            energy_per_value: 2.0 * qam_axis,
        },
    ])
}

/// Energy a client spends modulating the input and every hidden
/// activation once: `Σh · E` over `h_0..h_L` (the output layer is read
/// out, not modulated). Complex networks pay for two modulators per value
/// and need a perfect-square `total_levels`.
pub fn client_activation_energy(layer_sizes: &[usize], total_levels: u64, kind: ValueKind) -> Result<f64> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(Error::Input(format!("invalid layer sizes {layer_sizes:?}")));
    }
    let modulated: usize = layer_sizes[..layer_sizes.len() - 1].iter().sum();
    let per_value = match kind {
        ValueKind::Complex => 2.0 * axis_energy(qam_side(total_levels)?),
        ValueKind::Real => {
            if total_levels < 2 {
                return Err(Error::Input(format!("{total_levels} levels cannot encode a value")));
            }
            axis_energy(total_levels)
        }
    };
    Ok(modulated as f64 * per_value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_levels() {
        let t = equivalence_table(16, 7, 16, 10).unwrap();
        let energies: Vec<f64> = t.iter().map(|r| r.energy_per_value).collect();
        assert_eq!(energies, vec![2.25, 56.25, 2.25, 4.5]);
        assert_eq!(t[2].total_levels, 4);
        assert_eq!(t[3].total_levels, 6);
        let values = 49 * 16 + 16 + 16 * 10 + 10;
        assert_eq!(t[0].weight_values, 2 * values);
        assert_eq!(t[1].weight_values, values);
    }

    #[test]
    fn bits_per_value() {
        let t = equivalence_table(64, 7, 16, 10).unwrap();
        assert_eq!(t[0].bits_per_value, 3.0);
        assert_eq!(t[1].bits_per_value, 6.0);
        assert_eq!(equivalence_table(4, 1, 1, 1).unwrap()[2].total_levels, 2);
    }

    #[test]
    fn energy_levels() {
        assert_eq!(energy_equivalent_levels(4).unwrap(), 3);
        assert_eq!(energy_equivalent_levels(16).unwrap(), 6);
        assert_eq!(energy_equivalent_levels(256).unwrap(), 23);
    }

    #[test]
    fn non_square_is_rejected() {
        assert_eq!(equivalence_table(15, 7, 16, 10).unwrap_err().kind(), "input");
        assert!(energy_equivalent_levels(1).is_err());
        assert!(client_activation_energy(&[2, 2], 8, ValueKind::Complex).is_err());
    }

    #[test]
    fn client_energy() {
        let sizes = [49, 16, 10];
        assert_eq!(client_activation_energy(&sizes, 16, ValueKind::Real).unwrap(), 3656.25);
        assert_eq!(client_activation_energy(&sizes, 16, ValueKind::Complex).unwrap(), 292.5);
        assert_eq!(client_activation_energy(&[1, 1, 3], 4, ValueKind::Complex).unwrap(), 1.0);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
    }
}
