//! Fluid sub-problem on one window: damped continuity, J r-weighted Galerkin
//! momentum, and the Picard loop that couples them.

pub mod continuity;
pub mod grid;
pub mod momentum;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use continuity::TopClosure;
pub use grid::{BasisTables, CellGrid, FaceVelocity, GeometryLevel, PlateColumns};

use crate::bases::FluidBasis;
use crate::error::{Error, Result};
use continuity::{damping_dissipation, discrete_divergence, theta_step, TransportLevel};
use momentum::{condition_number, midpoint_forms, viscous_matrix, weighted_gram};

/// p(r) = r^γ + δ r^a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressureLaw {
    pub gamma: f64,
    pub delta: f64,
    pub a: f64,
}

impl PressureLaw {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(Error::Config(format!("adiabatic exponent must exceed 1 (got {})", self.gamma)));
        }
        if !(self.a >= 9.0) {
            return Err(Error::Config(format!("artificial exponent must be at least 9 (got {})", self.a)));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Config(format!("artificial pressure weight must be non-negative (got {})", self.delta)));
        }
        Ok(())
    }

    pub fn pressure(&self, r: f64) -> f64 {
        r.powf(self.gamma) + self.delta * r.powf(self.a)
    }

    /// Φ(r) = r^γ/(γ-1) + δ r^a/(a-1).
    pub fn internal(&self, r: f64) -> f64 {
        r.powf(self.gamma) / (self.gamma - 1.0) + self.delta * r.powf(self.a) / (self.a - 1.0)
    }

    /// Φ'(r).
    pub fn enthalpy(&self, r: f64) -> f64 {
        self.gamma / (self.gamma - 1.0) * r.powf(self.gamma - 1.0)
            + self.delta * self.a / (self.a - 1.0) * r.powf(self.a - 1.0)
    }

    /// Φ''(r) = γ r^(γ-2) + δ a r^(a-2).
    pub fn stiffness(&self, r: f64) -> f64 {
        self.gamma * r.powf(self.gamma - 2.0) + self.delta * self.a * r.powf(self.a - 2.0)
    }
}

/// Density on the cell grid and modal velocity at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidState {
    pub r: Vec<f64>,
    pub alpha: Vec<f64>,
    pub t: f64,
}

impl FluidState {
    pub fn check(&self) -> Result<()> {
        if self.alpha.iter().chain(&self.r).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("fluid state"));
        }
        let (min, cell) = self
            .r
            .iter()
            .enumerate()
            .fold((f64::INFINITY, 0), |acc, (c, &v)| if v < acc.0 { (v, c) } else { acc });
        if !(min > 0.0) {
            return Err(Error::NonPositiveDensity { min, cell });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FspParams {
    pub eps: f64,
    pub mu: f64,
    pub lambda: f64,
    pub law: PressureLaw,
    pub closure: TopClosure,
    pub dt_window: f64,
    pub substeps: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

/// Grid, basis tables and plate columns shared by every window of a run.
#[derive(Debug, Clone)]
pub struct FspContext {
    pub grid: CellGrid,
    pub tables: BasisTables,
    pub columns: PlateColumns,
    pub k: usize,
}

impl FspContext {
    pub fn new(grid: CellGrid, basis: &FluidBasis, plate: &crate::bases::PlateBasis) -> Self {
        Self {
            grid,
            tables: BasisTables::new(basis, &grid),
            columns: PlateColumns::new(plate, &grid),
            k: basis.k(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub iterations: usize,
    pub increment: f64,
    /// Increment after every iteration.
    pub history: Vec<f64>,
    pub density_min: f64,
    pub density_max: f64,
    pub mass_condition: f64,
    pub upwinded_faces: usize,
    pub monotone: bool,
    /// Largest modal velocity norm seen on the window.
    pub velocity_norm: f64,
}

/// Terms of the fluid energy balance on one window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FspEnergyReport {
    pub energy_start: f64,
    pub energy_end: f64,
    /// μ ∫ J|∇^w U|² + (μ+λ) ∫ J (∇^w·U)².
    pub viscous: f64,
    /// ε ∫ J |∇r|² Φ''(r).
    pub damping: f64,
    /// Boundary work on the top edge.
    pub boundary: f64,
    /// (1/4Δt) ∫ |v|² + |v - ∂t w|².
    pub penalty: f64,
    /// (1/4Δt) ∫ |∂t w|².
    pub plate_work: f64,
    /// ∫ |v - ∂t w|².
    pub gap_sq: f64,
    pub residual: f64,
}

impl FspEnergyReport {
    /// Right minus left side of the window inequality with the Δt^{3/2}
    /// allowance and the measured residual.
    pub fn inequality_margin(&self, dt_window: f64) -> f64 {
        let lhs = self.energy_end
            + self.viscous
            + self.damping
            + self.penalty
            - self.gap_sq / (8.0 * dt_window);
        let rhs = self.energy_start + self.plate_work + dt_window.powf(1.5) + self.residual.abs();
        rhs - lhs
    }
}

/// Exponential density envelope data for one window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Envelope {
    pub min_in: f64,
    pub max_in: f64,
    /// ∫ sup |div| dt with the scheme's effective divergence.
    pub log_growth: f64,
    /// Same with the pointwise transformed divergence at cell centres.
    pub log_growth_pointwise: f64,
    pub min_out: f64,
    pub max_out: f64,
}

impl Envelope {
    /// Relative excess over the envelope (≤ 0 when inside).
    pub fn excess(&self, inflation: f64) -> f64 {
        let upper = self.max_in * (self.log_growth.exp()) * (1.0 + inflation);
        let lower = self.min_in * ((-self.log_growth).exp()) * (1.0 - inflation);
        ((self.max_out - upper) / upper).max((lower - self.min_out) / lower)
    }
}

#[derive(Debug, Clone)]
pub struct FspWindow {
    pub state: FluidState,
    pub times: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
    pub alphas: Vec<Vec<f64>>,
    pub report: FixedPointReport,
    pub energy: FspEnergyReport,
    pub envelope: Envelope,
    pub mass_start: f64,
    pub mass_end: f64,
}

impl FspWindow {
    /// Fluid trace coefficients v at every substep end.
    pub fn trace_samples(&self) -> Vec<Vec<f64>> {
        let k = self.state.alpha.len() / 2;
        self.alphas.iter().map(|a| a[k..].to_vec()).collect()
    }
}

struct ContinuityPass {
    densities: Vec<Vec<f64>>,
    envelope: Envelope,
    upwinded: usize,
    monotone: bool,
    /// Mean mesh velocity per substep and column.
    mesh: Vec<Vec<f64>>,
}

fn mesh_velocity(from: &GeometryLevel, to: &GeometryLevel, tau: f64) -> Vec<f64> {
    from.w_center
        .iter()
        .zip(&to.w_center)
        .map(|(a, b)| (b - a) / tau)
        .collect()
}

fn check_density(r: &[f64]) -> Result<()> {
    let (min, cell) = r
        .iter()
        .enumerate()
        .fold((f64::INFINITY, 0), |acc, (c, &v)| if v < acc.0 { (v, c) } else { acc });
    if !(min > 0.0) {
        return Err(Error::NonPositiveDensity { min, cell });
    }
    Ok(())
}

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn pointwise_divergence_sup(ctx: &FspContext, level: &GeometryLevel, alpha: &[f64]) -> f64 {
    let grid = &ctx.grid;
    let cells = ctx.tables.cell_velocity(alpha);
    let mut sup: f64 = 0.0;
    for j in 0..grid.nz {
        let z = grid.zc(j);
        for i in 0..grid.nx {
            let u = &cells[grid.index(i, j)];
            let d = crate::geometry::transform_divergence(u.grad, z, level.w_center[i], level.slope_center[i]);
            sup = sup.max(d.abs());
        }
    }
    sup
}

/// Density through the window for a frozen velocity history `alphas`
/// (one modal vector per substep end). `levels` holds geometry at every
/// half substep.
#[allow(clippy::too_many_arguments)]
fn continuity_pass(
    ctx: &FspContext,
    params: &FspParams,
    r0: &[f64],
    levels: &[GeometryLevel],
    alphas: &[Vec<f64>],
    rannacher: bool,
) -> Result<ContinuityPass> {
    let n = params.substeps;
    let tau = params.dt_window / n as f64;
    let grid = &ctx.grid;
    let velocities: Vec<FaceVelocity> = alphas.iter().map(|a| ctx.tables.face_velocity(a)).collect();
    let mut densities = Vec::with_capacity(n + 1);
    densities.push(r0.to_vec());
    let mut envelope = Envelope {
        min_in: r0.iter().cloned().fold(f64::INFINITY, f64::min),
        max_in: r0.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        min_out: f64::INFINITY,
        max_out: f64::NEG_INFINITY,
        ..Default::default()
    };
    let mut upwinded = 0;
    let mut monotone = true;
    let mut mesh_all = Vec::with_capacity(n);
    let mut pointwise = vec![0.0; n + 1];
    for (j, a) in alphas.iter().enumerate() {
        pointwise[j] = pointwise_divergence_sup(ctx, &levels[2 * j], a);
    }
    for j in 0..n {
        let (from, mid, to) = (&levels[2 * j], &levels[2 * j + 1], &levels[2 * j + 2]);
        let mesh = mesh_velocity(from, to, tau);
        let r = densities.last().expect("density history");
        let next = if rannacher && j == 0 {
            let mid_alpha: Vec<f64> = alphas[0].iter().zip(&alphas[1]).map(|(a, b)| 0.5 * (a + b)).collect();
            let mid_velocity = ctx.tables.face_velocity(&mid_alpha);
            let mesh_a = mesh_velocity(from, mid, 0.5 * tau);
            let mesh_b = mesh_velocity(mid, to, 0.5 * tau);
            let la = TransportLevel { geometry: from, velocity: &velocities[0], mesh_velocity: &mesh_a };
            let lm = TransportLevel { geometry: mid, velocity: &mid_velocity, mesh_velocity: &mesh_a };
            let first = theta_step(grid, r, &la, &lm, 0.5 * tau, params.eps, 1.0, params.closure)?;
            let lm2 = TransportLevel { geometry: mid, velocity: &mid_velocity, mesh_velocity: &mesh_b };
            let lb = TransportLevel { geometry: to, velocity: &velocities[1], mesh_velocity: &mesh_b };
            let second = theta_step(grid, &first.density, &lm2, &lb, 0.5 * tau, params.eps, 1.0, params.closure)?;
            let rate = sup_abs(&discrete_divergence(grid, &lm, params.closure))
                .max(sup_abs(&discrete_divergence(grid, &lb, params.closure)));
            envelope.log_growth += tau * rate;
            upwinded += first.upwinded + second.upwinded;
            second.density
        } else {
            let lf = TransportLevel { geometry: from, velocity: &velocities[j], mesh_velocity: &mesh };
            let lt = TransportLevel { geometry: to, velocity: &velocities[j + 1], mesh_velocity: &mesh };
            let step = theta_step(grid, r, &lf, &lt, tau, params.eps, 0.5, params.closure)?;
            let rate = sup_abs(&discrete_divergence(grid, &lf, params.closure))
                .max(sup_abs(&discrete_divergence(grid, &lt, params.closure)));
            envelope.log_growth += tau * rate;
            upwinded += step.upwinded;
            monotone &= step.monotone;
            step.density
        };
        check_density(&next)?;
        envelope.log_growth_pointwise += tau * pointwise[j].max(pointwise[j + 1]);
        densities.push(next);
        mesh_all.push(mesh);
    }
    for r in &densities[1..] {
        for &v in r {
            envelope.min_out = envelope.min_out.min(v);
            envelope.max_out = envelope.max_out.max(v);
        }
    }
    if n == 0 {
        envelope.min_out = envelope.min_in;
        envelope.max_out = envelope.max_in;
    }
    Ok(ContinuityPass {
        densities,
        envelope,
        upwinded,
        monotone,
        mesh: mesh_all,
    })
}

struct MomentumPass {
    alphas: Vec<Vec<f64>>,
    energy: FspEnergyReport,
    mass_condition: f64,
    velocity_norm: f64,
}

#[allow(clippy::too_many_arguments)]
fn momentum_pass(
    ctx: &FspContext,
    params: &FspParams,
    alpha0: &[f64],
    levels: &[GeometryLevel],
    densities: &[Vec<f64>],
    frozen: &[Vec<f64>],
    mesh: &[Vec<f64>],
    viscous_cache: &mut Vec<DMatrix<f64>>,
) -> Result<MomentumPass> {
    let n = params.substeps;
    let tau = params.dt_window / n as f64;
    let grid = &ctx.grid;
    let dim = ctx.tables.dim;
    let k = dim / 2;
    let law = params.law;
    let dtw = params.dt_window;
    let area = grid.area();

    if viscous_cache.is_empty() {
        for j in 0..n {
            viscous_cache.push(viscous_matrix(grid, &ctx.tables, &levels[2 * j + 1], params.mu, params.lambda));
        }
    }

    let level_mass = |j: usize| -> Result<DMatrix<f64>> {
        let jr = momentum::jr_field(grid, &densities[j], &levels[2 * j].jacobian_center);
        let m = weighted_gram(grid, &ctx.tables, &jr);
        if m.clone().cholesky().is_none() {
            return Err(Error::MassMatrixNotSpd {
                min_eigenvalue: momentum::min_eigenvalue(&m),
            });
        }
        Ok(m)
    };
    let internal = |j: usize| -> f64 {
        densities[j]
            .iter()
            .enumerate()
            .map(|(c, &r)| area * levels[2 * j].jacobian_center[c % grid.nx] * law.internal(r))
            .sum()
    };
    let damping = |j: usize| damping_dissipation(grid, &levels[2 * j], &densities[j], params.eps, |r| law.enthalpy(r));
    // Top-edge work at level j with the step's mean mesh velocity.
    let boundary = |j: usize, alpha: &[f64], mesh: &[f64]| -> f64 {
        let velocity = ctx.tables.face_velocity(alpha);
        (0..grid.nx)
            .map(|i| {
                let [u1, u2] = velocity.z_faces[grid.nz * grid.nx + i];
                let rel = u2 - levels[2 * j].slope_center[i] * u1 - mesh[i];
                let r = densities[j][grid.index(i, grid.nz - 1)];
                let density_term = match params.closure {
                    TopClosure::Outflow => law.internal(r),
                    TopClosure::Conservative => -law.pressure(r),
                };
                grid.hx() * density_term * rel
            })
            .sum()
    };

    let mut alphas = Vec::with_capacity(n + 1);
    alphas.push(alpha0.to_vec());
    let mut m_prev = level_mass(0)?;
    let mut mass_condition = condition_number(&m_prev);
    let kinetic = |m: &DMatrix<f64>, a: &[f64]| {
        let v = DVector::from_column_slice(a);
        0.5 * v.dot(&(m * &v))
    };
    let mut energy = FspEnergyReport {
        energy_start: kinetic(&m_prev, alpha0) + internal(0),
        ..Default::default()
    };
    let mut damping_prev = damping(0);
    let mut velocity_norm = DVector::from_column_slice(alpha0).norm();
    for j in 0..n {
        let m_next = level_mass(j + 1)?;
        mass_condition = mass_condition.max(condition_number(&m_next));
        let m_bar = (&m_prev + &m_next) * 0.5;
        let m_dot = (&m_next - &m_prev) / tau;
        let mid = &levels[2 * j + 1];
        let r_bar: Vec<f64> = densities[j].iter().zip(&densities[j + 1]).map(|(a, b)| 0.5 * (a + b)).collect();
        let p_bar: Vec<f64> = densities[j]
            .iter()
            .zip(&densities[j + 1])
            .map(|(a, b)| 0.5 * (law.pressure(*a) + law.pressure(*b)))
            .collect();
        let u_mid: Vec<f64> = frozen[j].iter().zip(&frozen[j + 1]).map(|(a, b)| 0.5 * (a + b)).collect();
        let cell_velocity = ctx.tables.cell_velocity(&u_mid);
        let forms = midpoint_forms(grid, &ctx.tables, mid, &r_bar, &p_bar, &cell_velocity);
        let mut q = &m_dot * 0.5 + &forms.convective + &viscous_cache[j];
        let mut source = forms.pressure.clone();
        for i in 0..k {
            q[(k + i, k + i)] += 1.0 / (2.0 * dtw);
            source[k + i] += mid.plate_velocity[i] / (2.0 * dtw);
        }
        let a_now = DVector::from_column_slice(&alphas[j]);
        let lhs = &m_bar / tau + &q * 0.5;
        let rhs = (&m_bar / tau - &q * 0.5) * &a_now + source;
        let a_next = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::LinearSolve("momentum step matrix is singular".into()))?;
        if a_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("fluid velocity"));
        }
        let a_bar = (&a_now + &a_next) * 0.5;
        let v_bar: Vec<f64> = (0..k).map(|i| a_bar[k + i]).collect();
        let wt = &mid.plate_velocity;
        let gap: f64 = v_bar.iter().zip(wt).map(|(v, w)| (v - w).powi(2)).sum();
        let v_sq: f64 = v_bar.iter().map(|v| v * v).sum();
        let wt_sq: f64 = wt.iter().map(|w| w * w).sum();
        energy.viscous += tau * a_bar.dot(&(&viscous_cache[j] * &a_bar));
        energy.penalty += tau * (v_sq + gap) / (4.0 * dtw);
        energy.plate_work += tau * wt_sq / (4.0 * dtw);
        energy.gap_sq += tau * gap;
        let damping_next = damping(j + 1);
        energy.damping += 0.5 * tau * (damping_prev + damping_next);
        damping_prev = damping_next;
        let next_vec: Vec<f64> = a_next.iter().cloned().collect();
        energy.boundary += 0.5 * tau * (boundary(j, &alphas[j], &mesh[j]) + boundary(j + 1, &next_vec, &mesh[j]));
        velocity_norm = velocity_norm.max(a_next.norm());
        alphas.push(next_vec);
        m_prev = m_next;
    }
    energy.energy_end = kinetic(&m_prev, &alphas[n]) + internal(n);
    energy.residual = energy.energy_end + energy.viscous + energy.damping + energy.boundary + energy.penalty
        - energy.energy_start
        - energy.plate_work;
    Ok(MomentumPass {
        alphas,
        energy,
        mass_condition,
        velocity_norm,
    })
}

/// Picard iteration on the window; `levels` carries geometry at every half
/// substep (2n+1 entries) and `rannacher` selects implicit-Euler startup for
/// the first substep.
pub fn fsp_fixed_point(
    ctx: &FspContext,
    params: &FspParams,
    state_in: &FluidState,
    levels: &[GeometryLevel],
    rannacher: bool,
) -> Result<FspWindow> {
    let n = params.substeps;
    if n == 0 || levels.len() != 2 * n + 1 {
        return Err(Error::DimensionMismatch {
            context: "geometry levels",
            expected: 2 * n + 1,
            got: levels.len(),
        });
    }
    if state_in.alpha.len() != ctx.tables.dim || state_in.r.len() != ctx.grid.cells() {
        return Err(Error::DimensionMismatch {
            context: "fluid state",
            expected: ctx.tables.dim,
            got: state_in.alpha.len(),
        });
    }
    state_in.check()?;
    let mut frozen = vec![state_in.alpha.clone(); n + 1];
    let mut viscous_cache = Vec::new();
    let mut history = Vec::new();
    for iteration in 1..=params.picard_max_iter {
        let cont = continuity_pass(ctx, params, &state_in.r, levels, &frozen, rannacher)?;
        let mom = momentum_pass(
            ctx,
            params,
            &state_in.alpha,
            levels,
            &cont.densities,
            &frozen,
            &cont.mesh,
            &mut viscous_cache,
        )?;
        let increment = mom
            .alphas
            .iter()
            .zip(&frozen)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        history.push(increment);
        frozen = mom.alphas;
        if increment <= params.picard_tol {
            let times: Vec<f64> = (0..=n)
                .map(|j| state_in.t + params.dt_window * j as f64 / n as f64)
                .collect();
            let last = cont.densities.last().expect("densities").clone();
            let mass = |j: usize| ctx.grid.weighted_mass(&cont.densities[j], &levels[2 * j].jacobian_center);
            let state = FluidState {
                r: last,
                alpha: frozen[n].clone(),
                t: state_in.t + params.dt_window,
            };
            return Ok(FspWindow {
                report: FixedPointReport {
                    iterations: iteration,
                    increment,
                    history,
                    density_min: cont.envelope.min_out.min(cont.envelope.min_in),
                    density_max: cont.envelope.max_out.max(cont.envelope.max_in),
                    mass_condition: mom.mass_condition,
                    upwinded_faces: cont.upwinded,
                    monotone: cont.monotone,
                    velocity_norm: mom.velocity_norm,
                },
                energy: mom.energy,
                envelope: cont.envelope,
                mass_start: mass(0),
                mass_end: mass(n),
                state,
                times,
                densities: cont.densities,
                alphas: frozen,
            });
        }
    }
    Err(Error::FixedPointDiverged {
        iterations: params.picard_max_iter,
        increment: *history.last().unwrap_or(&f64::NAN),
    })
}
