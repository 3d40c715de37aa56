//! ALE map between the reference rectangle (0,L)×(-1,0) and the fluid domain
//! under a plate displaced by w, with the transformed differential operators.

use serde::Serialize;

use crate::bases::PlateBasis;
use crate::error::{Error, Result};

pub const DEFAULT_COLLISION_FLOOR: f64 = 1e-3;

/// (X, z) ↦ (X, (z+1) w + z).
pub fn ale_map_point(w: f64, x: f64, z: f64) -> Result<(f64, f64)> {
    if w <= -1.0 {
        return Err(Error::DegenerateMap {
            min_jacobian: 1.0 + w,
            node: 0,
            floor: 0.0,
        });
    }
    Ok((x, (z + 1.0) * w + z))
}

/// Inverse of [`ale_map_point`] for a fixed column displacement.
pub fn inverse_map_point(w: f64, x: f64, z_phys: f64) -> Result<(f64, f64)> {
    if w <= -1.0 {
        return Err(Error::DegenerateMap {
            min_jacobian: 1.0 + w,
            node: 0,
            floor: 0.0,
        });
    }
    Ok((x, (z_phys - w) / (1.0 + w)))
}

/// Transformed gradient of a scalar with reference gradient `grad` at height z.
#[inline]
pub fn transform_gradient(grad: [f64; 2], z: f64, w: f64, w_x: f64) -> [f64; 2] {
    let jac = 1.0 + w;
    [grad[0] - (z + 1.0) * w_x / jac * grad[1], grad[1] / jac]
}

/// Transformed divergence of a vector field with reference Jacobian `grad`.
#[inline]
pub fn transform_divergence(grad: [[f64; 2]; 2], z: f64, w: f64, w_x: f64) -> f64 {
    let jac = 1.0 + w;
    grad[0][0] - (z + 1.0) * w_x / jac * grad[0][1] + grad[1][1] / jac
}

/// Displacement trace data on the nodes of a Γ-grid.
#[derive(Debug, Clone, Serialize)]
pub struct AleMap {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub dw_dx: Vec<f64>,
    pub dw_dt: Vec<f64>,
    pub jacobian: Vec<f64>,
    pub surface_jacobian: Vec<f64>,
}

impl AleMap {
    pub fn from_values(
        x: Vec<f64>,
        w: Vec<f64>,
        dw_dx: Vec<f64>,
        dw_dt: Vec<f64>,
        collision_floor: f64,
    ) -> Result<Self> {
        for (name, v) in [("w", &w), ("dw_dx", &dw_dx), ("dw_dt", &dw_dt)] {
            if v.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    context: name_context(name),
                    expected: x.len(),
                    got: v.len(),
                });
            }
        }
        let jacobian: Vec<f64> = w.iter().map(|w| 1.0 + w).collect();
        let surface_jacobian = dw_dx.iter().map(|d| (1.0 + d * d).sqrt()).collect();
        let map = Self {
            x,
            w,
            dw_dx,
            dw_dt,
            jacobian,
            surface_jacobian,
        };
        map.check(collision_floor)?;
        Ok(map)
    }

    /// Builds the map from modal displacement and velocity; x-derivatives are
    /// taken from the basis functions directly.
    pub fn from_modal(
        plate: &PlateBasis,
        beta: &[f64],
        gamma: &[f64],
        x: Vec<f64>,
        collision_floor: f64,
    ) -> Result<Self> {
        let mut w = Vec::with_capacity(x.len());
        let mut dw_dx = Vec::with_capacity(x.len());
        let mut dw_dt = Vec::with_capacity(x.len());
        for &xi in &x {
            let d = plate.synthesize(beta, xi);
            w.push(d[0]);
            dw_dx.push(d[1]);
            dw_dt.push(plate.synthesize(gamma, xi)[0]);
        }
        Self::from_values(x, w, dw_dx, dw_dt, collision_floor)
    }

    pub fn min_jacobian(&self) -> (f64, usize) {
        self.jacobian
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |acc, (i, &j)| if j < acc.0 { (j, i) } else { acc })
    }

    fn check(&self, floor: f64) -> Result<()> {
        let (min, node) = self.min_jacobian();
        if !(min > floor) {
            return Err(Error::DegenerateMap {
                min_jacobian: min,
                node,
                floor,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn name_context(name: &str) -> &'static str {
    match name {
        "w" => "ale displacement",
        "dw_dx" => "ale slope",
        _ => "ale velocity",
    }
}

/// Uniform node grid on the reference rectangle, (nx+1)×(nz+1) nodes,
/// stored row by row from the bottom edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeGrid {
    pub nx: usize,
    pub nz: usize,
    pub length: f64,
}

impl NodeGrid {
    pub fn hx(&self) -> f64 {
        self.length / self.nx as f64
    }
    pub fn hz(&self) -> f64 {
        1.0 / self.nz as f64
    }
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }
    pub fn z(&self, j: usize) -> f64 {
        -1.0 + j as f64 * self.hz()
    }
    pub fn len(&self) -> usize {
        (self.nx + 1) * (self.nz + 1)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    pub fn x_nodes(&self) -> Vec<f64> {
        (0..=self.nx).map(|i| self.x(i)).collect()
    }
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..=self.nz {
            for i in 0..=self.nx {
                out.push(f(self.x(i), self.z(j)));
            }
        }
        out
    }
}

/// Finite-difference order for node-grid derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FdOrder {
    Second,
    Fourth,
}

/// Derivative at position `p` of a uniformly sampled line of `n` values.
fn line_derivative(at: impl Fn(usize) -> f64, n: usize, h: f64, p: usize, order: FdOrder) -> f64 {
    match order {
        FdOrder::Second => {
            if p == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else if p == n - 1 {
                (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h)
            } else {
                (at(p + 1) - at(p - 1)) / (2.0 * h)
            }
        }
        FdOrder::Fourth => {
            const ONE_SIDED: [[f64; 5]; 2] = [
                [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25],
                [-0.25, -5.0 / 6.0, 1.5, -0.5, 1.0 / 12.0],
            ];
            if p >= 2 && p + 2 < n {
                (at(p - 2) - 8.0 * at(p - 1) + 8.0 * at(p + 1) - at(p + 2)) / (12.0 * h)
            } else if p < 2 {
                let c = &ONE_SIDED[p];
                (0..5).map(|q| c[q] * at(q)).sum::<f64>() / h
            } else {
                let c = &ONE_SIDED[n - 1 - p];
                -(0..5).map(|q| c[q] * at(n - 1 - q)).sum::<f64>() / h
            }
        }
    }
}

fn check_grid(grid: &NodeGrid, ale: &AleMap, len: usize, order: FdOrder) -> Result<()> {
    if len != grid.len() {
        return Err(Error::DimensionMismatch {
            context: "node field",
            expected: grid.len(),
            got: len,
        });
    }
    if ale.len() != grid.nx + 1 {
        return Err(Error::DimensionMismatch {
            context: "ale columns",
            expected: grid.nx + 1,
            got: ale.len(),
        });
    }
    let need = if order == FdOrder::Fourth { 4 } else { 2 };
    if grid.nx < need || grid.nz < need {
        return Err(Error::Config(format!(
            "grid {}×{} too coarse for the requested difference order",
            grid.nx, grid.nz
        )));
    }
    Ok(())
}

/// Reference gradient of a node field by finite differences.
pub fn reference_gradient(f: &[f64], grid: &NodeGrid, order: FdOrder) -> (Vec<f64>, Vec<f64>) {
    let (nxp, nzp) = (grid.nx + 1, grid.nz + 1);
    let mut gx = vec![0.0; grid.len()];
    let mut gz = vec![0.0; grid.len()];
    for j in 0..nzp {
        for i in 0..nxp {
            let idx = grid.index(i, j);
            gx[idx] = line_derivative(|p| f[grid.index(p, j)], nxp, grid.hx(), i, order);
            gz[idx] = line_derivative(|p| f[grid.index(i, p)], nzp, grid.hz(), j, order);
        }
    }
    (gx, gz)
}

/// ∇^w f on the node grid; returns (x component, z component).
pub fn transformed_gradient(
    f: &[f64],
    grid: &NodeGrid,
    ale: &AleMap,
    order: FdOrder,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_grid(grid, ale, f.len(), order)?;
    let (mut gx, mut gz) = reference_gradient(f, grid, order);
    for j in 0..=grid.nz {
        let z = grid.z(j);
        for i in 0..=grid.nx {
            let idx = grid.index(i, j);
            let t = transform_gradient([gx[idx], gz[idx]], z, ale.w[i], ale.dw_dx[i]);
            gx[idx] = t[0];
            gz[idx] = t[1];
        }
    }
    Ok((gx, gz))
}

/// ∇^w · U on the node grid.
pub fn transformed_divergence(
    ux: &[f64],
    uz: &[f64],
    grid: &NodeGrid,
    ale: &AleMap,
    order: FdOrder,
) -> Result<Vec<f64>> {
    check_grid(grid, ale, ux.len(), order)?;
    check_grid(grid, ale, uz.len(), order)?;
    let (ux_x, ux_z) = reference_gradient(ux, grid, order);
    let (uz_x, uz_z) = reference_gradient(uz, grid, order);
    let mut out = vec![0.0; grid.len()];
    for j in 0..=grid.nz {
        let z = grid.z(j);
        for i in 0..=grid.nx {
            let idx = grid.index(i, j);
            out[idx] = transform_divergence(
                [[ux_x[idx], ux_z[idx]], [uz_x[idx], uz_z[idx]]],
                z,
                ale.w[i],
                ale.dw_dx[i],
            );
        }
    }
    Ok(out)
}

/// Mesh velocity (0, (z+1) ∂t w) on the node grid.
pub fn ale_velocity(dw_dt: &[f64], grid: &NodeGrid) -> (Vec<f64>, Vec<f64>) {
    let ux = vec![0.0; grid.len()];
    let uz = grid_from_columns(grid, |i, z| (z + 1.0) * dw_dt[i]);
    (ux, uz)
}

fn grid_from_columns(grid: &NodeGrid, f: impl Fn(usize, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..=grid.nz {
        let z = grid.z(j);
        for i in 0..=grid.nx {
            out.push(f(i, z));
        }
    }
    out
}
