//! Plate nonlinearities F(w) with potentials Π(w).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bases::PlateTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    LinearZero,
    /// F = (w'')³ against s'', potential ¼∫(w'')⁴.
    CubicQuasilinear,
    /// F = (q1 ∫w'² - q2) ∫ w' s', potential q1/4 A² - q2/2 A with A = ∫w'².
    BergerType { q1: f64, q2: f64 },
}

impl Nonlinearity {
    pub fn from_selector(name: &str, q1: f64, q2: f64) -> Result<Self> {
        match name {
            "linear_zero" => Ok(Self::LinearZero),
            "cubic_quasilinear" => Ok(Self::CubicQuasilinear),
            "berger_type" => Ok(Self::BergerType { q1, q2 }),
            other => Err(Error::UnknownSelector(other.to_string())),
        }
    }

    pub fn selector(&self) -> &'static str {
        match self {
            Self::LinearZero => "linear_zero",
            Self::CubicQuasilinear => "cubic_quasilinear",
            Self::BergerType { .. } => "berger_type",
        }
    }

    /// Modal force F_j(β).
    pub fn force(&self, beta: &[f64], table: &PlateTable) -> Vec<f64> {
        let k = table.k();
        match *self {
            Self::LinearZero => vec![0.0; k],
            Self::CubicQuasilinear => {
                let curvature = table.field(2, beta);
                let cubed: Vec<f64> = curvature
                    .iter()
                    .zip(&table.weights)
                    .map(|(c, w)| w * c * c * c)
                    .collect();
                table.values[2]
                    .iter()
                    .map(|row| row.iter().zip(&cubed).map(|(s, c)| s * c).sum())
                    .collect()
            }
            Self::BergerType { q1, q2 } => {
                let slope = table.field(1, beta);
                let stretch: f64 = slope.iter().zip(&table.weights).map(|(s, w)| w * s * s).sum();
                let factor = q1 * stretch - q2;
                table.values[1]
                    .iter()
                    .map(|row| {
                        factor
                            * row
                                .iter()
                                .zip(&slope)
                                .zip(&table.weights)
                                .map(|((s, d), w)| w * s * d)
                                .sum::<f64>()
                    })
                    .collect()
            }
        }
    }

    /// Potential Π(β); its gradient is [`Nonlinearity::force`].
    pub fn potential(&self, beta: &[f64], table: &PlateTable) -> f64 {
        match *self {
            Self::LinearZero => 0.0,
            Self::CubicQuasilinear => {
                let curvature = table.field(2, beta);
                0.25 * curvature
                    .iter()
                    .zip(&table.weights)
                    .map(|(c, w)| w * c.powi(4))
                    .sum::<f64>()
            }
            Self::BergerType { q1, q2 } => {
                let slope = table.field(1, beta);
                let stretch: f64 = slope.iter().zip(&table.weights).map(|(s, w)| w * s * s).sum();
                0.25 * q1 * stretch * stretch - 0.5 * q2 * stretch
            }
        }
    }

    /// (κ, C*) with κ‖w''‖² + Π(w) + C* ≥ 0 for every clamped w on (0, L).
    pub fn coercivity_witness(&self, length: f64) -> (f64, f64) {
        match *self {
            Self::LinearZero | Self::CubicQuasilinear => (0.0, 0.0),
            Self::BergerType { q1, q2 } => {
                if q2 <= 0.0 {
                    (0.0, 0.0)
                } else if q1 > 0.0 {
                    (0.0, q2 * q2 / (4.0 * q1))
                } else {
                    // ∫w'² ≤ (L/π)² ∫w''² since w' vanishes at both ends.
                    (q2 * length * length / (2.0 * PI * PI), 0.0)
                }
            }
        }
    }
}
