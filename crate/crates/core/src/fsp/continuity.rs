//! ε-damped continuity equation in conservative reference form,
//! ∂t(J r) + ∇·(r G) = ε ∇·(J ∇r), with G the Piola-transformed relative
//! velocity. Finite volumes with a θ-scheme in time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsp::grid::{CellGrid, FaceVelocity, GeometryLevel};
use crate::linalg::{bicgstab, FivePoint};

/// Treatment of the top edge, where the fluid trace may differ from the
/// plate velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TopClosure {
    /// Zero total (advective plus diffusive) flux; conserves ∫ J r exactly.
    #[default]
    Conservative,
    /// Homogeneous Neumann data for r, so mass leaves with r (v - ∂t w).
    Outflow,
}

/// Face Péclet number above which the face value is upwinded.
pub const PECLET_LIMIT: f64 = 2.0;

/// Everything needed to build the transport operator at one time level.
pub struct TransportLevel<'a> {
    pub geometry: &'a GeometryLevel,
    pub velocity: &'a FaceVelocity,
    /// Mean mesh velocity ∂t w over the step, per column.
    pub mesh_velocity: &'a [f64],
}

/// Flux balance operator L with ∂t(J r) A = -L r.
///
/// Also returns the number of faces that needed upwinding.
pub fn transport_operator(
    grid: &CellGrid,
    level: &TransportLevel<'_>,
    eps: f64,
    closure: TopClosure,
) -> (FivePoint, usize) {
    let (nx, nz) = (grid.nx, grid.nz);
    let (hx, hz) = (grid.hx(), grid.hz());
    let mut op = FivePoint::zeros(nx, grid.cells());
    let mut upwinded = 0;
    let geo = level.geometry;
    let mut face = |op: &mut FivePoint, left: usize, right: usize, horizontal: bool, g: f64, jf: f64| {
        let (area, h) = if horizontal { (hz, hx) } else { (hx, hz) };
        let diffusion = eps * jf * area / h;
        let (wl, wr) = if g.abs() * h <= PECLET_LIMIT * eps * jf {
            (0.5, 0.5)
        } else {
            upwinded += 1;
            if g > 0.0 {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            }
        };
        let cl = area * g * wl + diffusion;
        let cr = area * g * wr - diffusion;
        op.diag[left] += cl;
        op.diag[right] -= cr;
        if horizontal {
            op.east[left] += cr;
            op.west[right] -= cl;
        } else {
            op.north[left] += cr;
            op.south[right] -= cl;
        }
    };
    for j in 0..nz {
        for i in 1..nx {
            let g = geo.jacobian_face[i] * level.velocity.x_faces[j * (nx + 1) + i];
            face(&mut op, grid.index(i - 1, j), grid.index(i, j), true, g, geo.jacobian_face[i]);
        }
    }
    for j in 1..nz {
        let zf = grid.zf(j);
        for i in 0..nx {
            let [u1, u2] = level.velocity.z_faces[j * nx + i];
            let g = u2 - (zf + 1.0) * (geo.slope_center[i] * u1 + level.mesh_velocity[i]);
            face(&mut op, grid.index(i, j - 1), grid.index(i, j), false, g, geo.jacobian_center[i]);
        }
    }
    if closure == TopClosure::Outflow {
        for i in 0..nx {
            let g = top_relative_velocity(grid, level, i);
            op.diag[grid.index(i, nz - 1)] += hx * g;
        }
    }
    (op, upwinded)
}

/// v - ∂t w on the top face above column i.
pub fn top_relative_velocity(grid: &CellGrid, level: &TransportLevel<'_>, i: usize) -> f64 {
    let [u1, u2] = level.velocity.z_faces[grid.nz * grid.nx + i];
    u2 - level.geometry.slope_center[i] * u1 - level.mesh_velocity[i]
}

/// Effective divergence seen by the scheme, (A ∂t J + Σ outward G)/(A J),
/// per cell.
pub fn discrete_divergence(grid: &CellGrid, level: &TransportLevel<'_>, closure: TopClosure) -> Vec<f64> {
    let (op, _) = transport_operator(grid, level, 0.0, closure);
    let mut balance = vec![0.0; grid.cells()];
    op.apply(&vec![1.0; grid.cells()], &mut balance);
    let area = grid.area();
    balance
        .iter()
        .enumerate()
        .map(|(c, b)| {
            let col = c % grid.nx;
            (area * level.mesh_velocity[col] + b) / (area * level.geometry.jacobian_center[col])
        })
        .collect()
}

/// One θ-step from `from` to `to`; returns r at the new level.
#[allow(clippy::too_many_arguments)]
pub fn theta_step(
    grid: &CellGrid,
    r: &[f64],
    from: &TransportLevel<'_>,
    to: &TransportLevel<'_>,
    tau: f64,
    eps: f64,
    theta: f64,
    closure: TopClosure,
) -> Result<ThetaStep> {
    let n = grid.cells();
    let area = grid.area();
    let (op_to, up_to) = transport_operator(grid, to, eps, closure);
    let mut rhs = vec![0.0; n];
    let mut monotone = true;
    let mut upwinded = up_to;
    if theta < 1.0 {
        let (op_from, up_from) = transport_operator(grid, from, eps, closure);
        upwinded += up_from;
        op_from.apply(r, &mut rhs);
        for c in 0..n {
            let mass = area * from.geometry.jacobian_center[c % grid.nx] / tau;
            rhs[c] = mass * r[c] - (1.0 - theta) * rhs[c];
            if mass - (1.0 - theta) * op_from.diag[c] < 0.0 {
                monotone = false;
            }
        }
    } else {
        for c in 0..n {
            rhs[c] = area * from.geometry.jacobian_center[c % grid.nx] / tau * r[c];
        }
    }
    let mut system = op_to;
    for v in system
        .west
        .iter_mut()
        .chain(system.east.iter_mut())
        .chain(system.south.iter_mut())
        .chain(system.north.iter_mut())
    {
        *v *= theta;
    }
    for c in 0..n {
        system.diag[c] =
            theta * system.diag[c] + area * to.geometry.jacobian_center[c % grid.nx] / tau;
    }
    let mut next = r.to_vec();
    bicgstab(&system, &rhs, &mut next, 1e-14, 2000)?;
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("density"));
    }
    Ok(ThetaStep {
        density: next,
        monotone,
        upwinded,
    })
}

#[derive(Debug, Clone)]
pub struct ThetaStep {
    pub density: Vec<f64>,
    /// Whether the explicit part had non-negative coefficients.
    pub monotone: bool,
    pub upwinded: usize,
}

/// Largest explicit-part coefficient ratio; θ-steps with
/// `tau ≤ 1 / ((1-θ) * stiffness)` keep the explicit half monotone.
pub fn explicit_stiffness(grid: &CellGrid, level: &TransportLevel<'_>, eps: f64, closure: TopClosure) -> f64 {
    let (op, _) = transport_operator(grid, level, eps, closure);
    let area = grid.area();
    op.diag
        .iter()
        .enumerate()
        .map(|(c, d)| d / (area * level.geometry.jacobian_center[c % grid.nx]))
        .fold(0.0, f64::max)
}

/// Discrete ε ∫ J |∇r|² Φ''(r) as the face sum
/// ε Σ J_f (r_R - r_L)(Φ'(r_R) - Φ'(r_L)) area/h.
pub fn damping_dissipation(
    grid: &CellGrid,
    geometry: &GeometryLevel,
    r: &[f64],
    eps: f64,
    enthalpy: impl Fn(f64) -> f64,
) -> f64 {
    let (nx, nz) = (grid.nx, grid.nz);
    let (hx, hz) = (grid.hx(), grid.hz());
    let phi: Vec<f64> = r.iter().map(|&v| enthalpy(v)).collect();
    let mut total = 0.0;
    for j in 0..nz {
        for i in 1..nx {
            let (l, rr) = (grid.index(i - 1, j), grid.index(i, j));
            total += geometry.jacobian_face[i] * hz / hx * (r[rr] - r[l]) * (phi[rr] - phi[l]);
        }
    }
    for j in 1..nz {
        for i in 0..nx {
            let (l, rr) = (grid.index(i, j - 1), grid.index(i, j));
            total += geometry.jacobian_center[i] * hx / hz * (r[rr] - r[l]) * (phi[rr] - phi[l]);
        }
    }
    eps * total
}
