//! Galerkin momentum forms weighted by J r on the reference cells.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::bases::VectorSample;
use crate::error::{Error, Result};
use crate::fsp::grid::{BasisTables, CellGrid, GeometryLevel};
use crate::geometry::{transform_divergence, transform_gradient};

/// Σ A (J r)_c g_i · g_j over cells, exactly symmetric.
pub fn weighted_gram(grid: &CellGrid, tables: &BasisTables, weight: &[f64]) -> DMatrix<f64> {
    let dim = tables.dim;
    let area = grid.area();
    let mut m = DMatrix::zeros(dim, dim);
    for (c, &wgt) in weight.iter().enumerate() {
        let g = tables.cell(c);
        let s = area * wgt;
        for i in 0..dim {
            let gi = g[i].value;
            if gi == [0.0, 0.0] {
                continue;
            }
            for j in i..dim {
                let gj = g[j].value;
                m[(i, j)] += s * (gi[0] * gj[0] + gi[1] * gj[1]);
            }
        }
    }
    for i in 0..dim {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    m
}

/// Product J r per cell for column Jacobians.
pub fn jr_field(grid: &CellGrid, r: &[f64], jacobian_center: &[f64]) -> Vec<f64> {
    r.iter()
        .enumerate()
        .map(|(c, r)| jacobian_center[c % grid.nx] * r)
        .collect()
}

/// Mass matrix M(J, r); fails unless r > 0, J > 0 and M factors.
pub fn assemble_mass_matrix(
    grid: &CellGrid,
    tables: &BasisTables,
    r: &[f64],
    jacobian_center: &[f64],
) -> Result<DMatrix<f64>> {
    let m = weighted_gram(grid, tables, &jr_field(grid, r, jacobian_center));
    let min_r = r.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_j = jacobian_center.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_r > 0.0) || !(min_j > 0.0) || m.clone().cholesky().is_none() {
        return Err(Error::MassMatrixNotSpd {
            min_eigenvalue: min_eigenvalue(&m),
        });
    }
    Ok(m)
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Spectral condition number of a symmetric positive matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Transformed gradients of every basis function in one cell.
fn transformed(samples: &[VectorSample], z: f64, w: f64, w_x: f64, out: &mut [[[f64; 2]; 2]], div: &mut [f64]) {
    for ((s, o), d) in samples.iter().zip(out.iter_mut()).zip(div.iter_mut()) {
        o[0] = transform_gradient(s.grad[0], z, w, w_x);
        o[1] = transform_gradient(s.grad[1], z, w, w_x);
        *d = transform_divergence(s.grad, z, w, w_x);
    }
}

/// μ ∫ J ∇^w g_i : ∇^w g_j + (μ+λ) ∫ J div^w g_i div^w g_j.
pub fn viscous_matrix(
    grid: &CellGrid,
    tables: &BasisTables,
    geometry: &GeometryLevel,
    mu: f64,
    lambda: f64,
) -> DMatrix<f64> {
    let dim = tables.dim;
    let area = grid.area();
    let mut k = DMatrix::zeros(dim, dim);
    let mut tg = vec![[[0.0; 2]; 2]; dim];
    let mut div = vec![0.0; dim];
    for j in 0..grid.nz {
        let z = grid.zc(j);
        for i in 0..grid.nx {
            let c = grid.index(i, j);
            let jac = geometry.jacobian_center[i];
            transformed(tables.cell(c), z, geometry.w_center[i], geometry.slope_center[i], &mut tg, &mut div);
            let s = area * jac;
            for a in 0..dim {
                for b in a..dim {
                    let mut frob = 0.0;
                    for p in 0..2 {
                        for q in 0..2 {
                            frob += tg[a][p][q] * tg[b][p][q];
                        }
                    }
                    k[(a, b)] += s * (mu * frob + (mu + lambda) * div[a] * div[b]);
                }
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            k[(a, b)] = k[(b, a)];
        }
    }
    k
}

/// Forms that depend on the density and the frozen velocity at a midpoint.
pub struct MidpointForms {
    /// Skew convective matrix, C_ij = ½ ∫ J [(a·∇^w) g_j · g_i - (a·∇^w) g_i · g_j].
    pub convective: DMatrix<f64>,
    /// P_i = ∫ J p div^w g_i.
    pub pressure: DVector<f64>,
}

/// `density` and `pressure` are per cell; `velocity` is the frozen field at
/// cell centres; the advecting field is r (Ũ - mesh velocity).
pub fn midpoint_forms(
    grid: &CellGrid,
    tables: &BasisTables,
    geometry: &GeometryLevel,
    density: &[f64],
    pressure: &[f64],
    velocity: &[VectorSample],
) -> MidpointForms {
    let dim = tables.dim;
    let area = grid.area();
    let mut conv = DMatrix::zeros(dim, dim);
    let mut pvec = DVector::zeros(dim);
    let mut tg = vec![[[0.0; 2]; 2]; dim];
    let mut div = vec![0.0; dim];
    let mut adv = vec![[0.0; 2]; dim];
    for j in 0..grid.nz {
        let z = grid.zc(j);
        for i in 0..grid.nx {
            let c = grid.index(i, j);
            let jac = geometry.jacobian_center[i];
            let g = tables.cell(c);
            transformed(g, z, geometry.w_center[i], geometry.slope_center[i], &mut tg, &mut div);
            let s = area * jac;
            for a in 0..dim {
                pvec[a] += s * pressure[c] * div[a];
            }
            let u = velocity[c].value;
            let carrier = [
                density[c] * u[0],
                density[c] * (u[1] - (z + 1.0) * geometry.velocity_center[i]),
            ];
            for a in 0..dim {
                for p in 0..2 {
                    adv[a][p] = carrier[0] * tg[a][p][0] + carrier[1] * tg[a][p][1];
                }
            }
            let half = 0.5 * s;
            for a in 0..dim {
                for b in (a + 1)..dim {
                    let ga = g[a].value;
                    let gb = g[b].value;
                    let v = half
                        * (adv[b][0] * ga[0] + adv[b][1] * ga[1] - adv[a][0] * gb[0] - adv[a][1] * gb[1]);
                    conv[(a, b)] += v;
                    conv[(b, a)] -= v;
                }
            }
        }
    }
    MidpointForms {
        convective: conv,
        pressure: pvec,
    }
}

/// Right side of M α̇ = rhs(α) for the momentum ODE with frozen coefficients:
/// P - (½Ṁ + C + K) α - (α_ext - β̇) / (2Δt) on the lifting block.
#[allow(clippy::too_many_arguments)]
pub fn momentum_rhs(
    alpha: &DVector<f64>,
    mass_rate: &DMatrix<f64>,
    convective: &DMatrix<f64>,
    viscous: &DMatrix<f64>,
    pressure: &DVector<f64>,
    plate_velocity: &[f64],
    dt_window: f64,
) -> Result<DVector<f64>> {
    let dim = alpha.len();
    let k = dim / 2;
    if plate_velocity.len() != k || mass_rate.nrows() != dim || pressure.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "momentum right side",
            expected: dim,
            got: pressure.len(),
        });
    }
    let mut rhs = pressure - (mass_rate * 0.5 + convective + viscous) * alpha;
    for i in 0..k {
        rhs[k + i] -= (alpha[k + i] - plate_velocity[i]) / (2.0 * dt_window);
    }
    Ok(rhs)
}
