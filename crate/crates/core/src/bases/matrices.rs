//! Modal matrices for the structure sub-problem.

use nalgebra::{DMatrix, DVector};

use crate::bases::heat::HeatBasis;
use crate::bases::plate::PlateBasis;
use crate::error::{Error, Result};
use crate::quadrature::LineRule;

#[derive(Debug, Clone)]
pub struct CoupledMatrices {
    /// `coupling[(i, j)] = ∫ h_i' s_j'`.
    pub coupling: DMatrix<f64>,
    /// `regularizer[(i, j)] = ∫ s_i''' s_j'''`.
    pub regularizer: DMatrix<f64>,
    pub xi_plate: DVector<f64>,
    pub xi_heat: DVector<f64>,
    /// Entries that moved by more than the tolerance when the rule was refined.
    pub warnings: Vec<String>,
}

/// Panels of the default rule; each carries `order` Gauss points.
pub fn default_panels(k: usize) -> usize {
    (4 * k).max(8)
}

pub fn assemble_coupled_matrices(
    plate: &PlateBasis,
    heat: &HeatBasis,
    order: usize,
) -> Result<CoupledMatrices> {
    if plate.k() != heat.k() {
        return Err(Error::DimensionMismatch {
            context: "plate/heat basis",
            expected: plate.k(),
            got: heat.k(),
        });
    }
    let k = plate.k();
    let panels = default_panels(k);
    let build = |order: usize| {
        let rule = LineRule::composite(0.0, plate.length, panels, order);
        let table = plate.tabulate(&rule);
        let coupling = DMatrix::from_fn(k, k, |i, j| {
            rule.points
                .iter()
                .zip(&rule.weights)
                .enumerate()
                .map(|(q, (&x, &w))| w * heat.derivative(i, x) * table.values[1][j][q])
                .sum()
        });
        let mut regularizer = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let e = table.inner(3, i, 3, j);
                regularizer[(i, j)] = e;
                regularizer[(j, i)] = e;
            }
        }
        (coupling, regularizer)
    };
    let (coupling, regularizer) = build(order);
    let (fine_coupling, fine_regularizer) = build(2 * order);
    let mut warnings = Vec::new();
    let tol = 1e-10;
    for (name, coarse, fine) in [
        ("coupling", &coupling, &fine_coupling),
        ("regularizer", &regularizer, &fine_regularizer),
    ] {
        let scale = fine.amax().max(1.0);
        let change = (coarse - fine).amax() / scale;
        if change > tol {
            warnings.push(format!(
                "{name} matrix changed by {change:.2e} under quadrature order doubling"
            ));
        }
    }
    Ok(CoupledMatrices {
        coupling,
        regularizer,
        xi_plate: DVector::from_vec(plate.eigenvalues()),
        xi_heat: DVector::from_vec(heat.xi.clone()),
        warnings,
    })
}
