//! Lie splitting over [0, T]: per window the structure sub-problem runs
//! with the lagged fluid trace, then the fluid sub-problem runs on the fresh
//! plate motion.

pub mod admissibility;
pub mod continuation;
pub mod handoff;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use admissibility::{check_dt_admissibility, Admissibility, AdmissibilityInputs};
pub use continuation::{ContinuationEnd, ContinuationPolicy, ContinuationTrace, MinJacobianHistory, SampledHistory};
pub use handoff::{handoff_validate, Handoff};

use crate::bases::{assemble_coupled_matrices, matrices::default_panels, FluidBasis, HeatBasis, PlateBasis};
use crate::config::RunConfig;
use crate::diagnostics::{compute_ledger, inequality_verdicts, korn_constant, EnergyLedger, Verdict, VerdictSettings};
use crate::error::{Error, Result};
use crate::fsp::continuity::{explicit_stiffness, TransportLevel};
use crate::fsp::{
    fsp_fixed_point, CellGrid, Envelope, FixedPointReport, FluidState, FspContext, FspEnergyReport, FspParams,
    GeometryLevel,
};
use crate::quadrature::LineRule;
use crate::ssp::{ssp_step, PlateState, SspEnergyReport, SspSystem, TraceHistory};

/// Relative envelope inflation used by the density verdict.
pub const ENVELOPE_INFLATION: f64 = 1e-6;
/// Relative per-window mass drift allowed by the conservation verdict.
pub const MASS_TOLERANCE: f64 = 1e-6;
/// Upper limit on automatically raised fluid substeps.
pub const MAX_FSP_SUBSTEPS: usize = 4096;

/// Everything measured on one splitting window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub ssp: SspEnergyReport,
    pub fixed_point: FixedPointReport,
    pub fsp_energy: FspEnergyReport,
    pub envelope: Envelope,
    /// ‖v - ∂t w‖ in L²(window × Γ).
    pub coupling_gap: f64,
    pub min_jacobian: f64,
    pub mass_start: f64,
    pub mass_end: f64,
    /// Row of the energy ledger at the window end.
    pub ledger_row: usize,
    pub admissibility: Vec<Admissibility>,
}

impl WindowRecord {
    pub fn mass_drift(&self) -> f64 {
        (self.mass_end - self.mass_start).abs() / self.mass_start
    }

    pub const CSV_HEADER: &'static str = "window,t_start,t_end,ssp_residual,ssp_energy_start,ssp_energy_end,picard_iterations,picard_increment,density_min,density_max,mass_condition,upwinded_faces,monotone,velocity_norm,fsp_energy_start,fsp_energy_end,fsp_viscous,fsp_damping,fsp_boundary,fsp_penalty,fsp_plate_work,fsp_residual,fsp_inequality_margin,coupling_gap,min_jacobian,mass_start,mass_end,mass_drift,envelope_log_growth,envelope_excess";

    pub fn csv_row(&self, dt: f64) -> String {
        let fp = &self.fixed_point;
        let fe = &self.fsp_energy;
        let mut cells = vec![self.index.to_string()];
        cells.extend(
            [self.t_start, self.t_end, self.ssp.residual, self.ssp.energy_start, self.ssp.energy_end]
                .iter()
                .map(|v| format!("{v:e}")),
        );
        cells.push(fp.iterations.to_string());
        cells.extend([fp.increment, fp.density_min, fp.density_max, fp.mass_condition].iter().map(|v| format!("{v:e}")));
        cells.push(fp.upwinded_faces.to_string());
        cells.push(fp.monotone.to_string());
        cells.extend(
            [
                fp.velocity_norm,
                fe.energy_start,
                fe.energy_end,
                fe.viscous,
                fe.damping,
                fe.boundary,
                fe.penalty,
                fe.plate_work,
                fe.residual,
                fe.inequality_margin(dt),
                self.coupling_gap,
                self.min_jacobian,
                self.mass_start,
                self.mass_end,
                self.mass_drift(),
                self.envelope.log_growth,
                self.envelope.excess(ENVELOPE_INFLATION),
            ]
            .iter()
            .map(|v| format!("{v:e}")),
        );
        cells.join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// min J reached the collision floor inside `window`; the window was
    /// not recorded.
    Collision { window: usize, t: f64, min_jacobian: f64 },
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Completed => "completed",
            Self::Collision { .. } => "collision",
        }
    }
}

/// Substep counts chosen for the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Substeps {
    pub fsp: usize,
    pub ssp: usize,
}

impl Substeps {
    /// Structure substeps per fluid substep.
    pub fn ratio(&self) -> usize {
        self.ssp / self.fsp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensitySnapshot {
    /// Number of completed windows.
    pub step: usize,
    pub t: f64,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutput {
    pub config: RunConfig,
    pub status: RunStatus,
    pub substeps: Substeps,
    pub windows: Vec<WindowRecord>,
    /// Row 0 is t = 0, row n the end of window n-1.
    pub ledger: Vec<EnergyLedger>,
    pub plate: PlateState,
    pub fluid: FluidState,
    pub verdicts: Vec<Verdict>,
    /// ‖v - ∂t w‖ in L²((0, T) × Γ) over completed windows.
    pub coupling_gap: f64,
    pub korn_constant: f64,
    /// (κ, C*).
    pub coercivity: (f64, f64),
    /// Initial energy bound C(E0) = S(0) + F(0) + ¼|v(0)|² + C* + T√Δt.
    pub energy_bound: f64,
    pub continuation: ContinuationTrace,
    pub snapshots: Vec<DensitySnapshot>,
    pub warnings: Vec<String>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn max_mass_drift(&self) -> f64 {
        self.windows.iter().map(|w| w.mass_drift()).fold(0.0, f64::max)
    }
}

/// Immutable pieces shared by all windows.
pub struct Setup {
    pub plate_basis: PlateBasis,
    pub fluid_basis: FluidBasis,
    pub system: SspSystem,
    pub ctx: FspContext,
    pub params: FspParams,
    pub warnings: Vec<String>,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let d = &config.discretization;
        let length = config.domain.length;
        let plate_basis = PlateBasis::new(d.k, length)?;
        let heat = HeatBasis::new(d.k, length);
        let mats = assemble_coupled_matrices(&plate_basis, &heat, d.quadrature_order)?;
        let warnings = mats.warnings.clone();
        let rule = LineRule::composite(0.0, length, default_panels(d.k), d.quadrature_order);
        let system = SspSystem {
            table: plate_basis.tabulate(&rule),
            mats,
            nonlinearity: config.plate.nonlinearity()?,
            delta: config.fluid.delta,
            dt_window: config.dt(),
        };
        let fluid_basis = FluidBasis::new(&plate_basis);
        let grid = CellGrid::new(d.nx, d.nz, length)?;
        let ctx = FspContext::new(grid, &fluid_basis, &plate_basis);
        let f = &config.fluid;
        let params = FspParams {
            eps: f.epsilon,
            mu: f.mu,
            lambda: f.lambda,
            law: f.law(),
            closure: f.top_closure,
            dt_window: config.dt(),
            substeps: d.fsp_substeps,
            picard_tol: config.solver.picard_tol,
            picard_max_iter: config.solver.picard_max_iter,
        };
        Ok(Self {
            plate_basis,
            fluid_basis,
            system,
            ctx,
            params,
            warnings,
        })
    }
}

fn padded(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    out[..v.len()].copy_from_slice(v);
    out
}

/// Initial density: mean plus a cosine wave plus seeded noise, clipped at
/// 1e-3 of the mean and mollified whenever noise or clipping made it rough.
pub fn initial_density(config: &RunConfig, grid: &CellGrid) -> Vec<f64> {
    let init = &config.initial;
    let mean = init.density;
    let length = config.domain.length;
    let wave = init.density_wave;
    let mut r = grid.sample(|x, z| {
        mean + wave * (std::f64::consts::PI * x / length).cos() * (std::f64::consts::PI * z).cos()
    });
    let mut rough = false;
    if init.density_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.output.seed);
        for v in &mut r {
            *v += init.density_noise * rng.random_range(-1.0..=1.0);
        }
        rough = true;
    }
    let floor = 1e-3 * mean;
    for v in &mut r {
        if *v < floor {
            *v = floor;
            rough = true;
        }
    }
    if rough {
        r = mollify(grid, &r);
    }
    r
}

/// One pass of the ½-centre, ⅛-neighbour average with mirrored edges.
fn mollify(grid: &CellGrid, r: &[f64]) -> Vec<f64> {
    let (nx, nz) = (grid.nx, grid.nz);
    let at = |i: isize, j: isize| {
        let i = i.clamp(0, nx as isize - 1) as usize;
        let j = j.clamp(0, nz as isize - 1) as usize;
        r[grid.index(i, j)]
    };
    let mut out = vec![0.0; r.len()];
    for j in 0..nz as isize {
        for i in 0..nx as isize {
            out[grid.index(i as usize, j as usize)] = 0.5 * at(i, j)
                + 0.125 * (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1));
        }
    }
    out
}

pub fn initial_states(config: &RunConfig, setup: &Setup) -> (PlateState, FluidState) {
    let k = config.discretization.k;
    let init = &config.initial;
    let plate = PlateState {
        beta: padded(&init.plate_displacement, k),
        gamma: padded(&init.plate_velocity, k),
        alpha: padded(&init.temperature, k),
        t: 0.0,
    };
    let fluid = FluidState {
        r: initial_density(config, &setup.ctx.grid),
        alpha: padded(&init.fluid_velocity, 2 * k),
        t: 0.0,
    };
    (plate, fluid)
}

/// Fluid substeps: the configured count, raised until the explicit half of
/// Crank–Nicolson is monotone at t = 0 with a 1.5 safety factor. Structure
/// substeps: an even multiple (at least 4) of the fluid count covering the
/// RK4 stability estimate and max(16, 8Δt/(Δt/4)) = 32.
pub fn choose_substeps(config: &RunConfig, setup: &Setup, plate: &PlateState, fluid: &FluidState) -> (Substeps, Vec<String>) {
    let mut warnings = Vec::new();
    let dt = config.dt();
    let ctx = &setup.ctx;
    let level = ctx.columns.level(0.0, &plate.beta, &plate.gamma);
    let velocity = ctx.tables.face_velocity(&fluid.alpha);
    let mesh = level.velocity_center.clone();
    let transport = TransportLevel {
        geometry: &level,
        velocity: &velocity,
        mesh_velocity: &mesh,
    };
    let stiffness = explicit_stiffness(&ctx.grid, &transport, setup.params.eps, setup.params.closure);
    let monotone = (0.75 * dt * stiffness).ceil() as usize;
    let mut fsp = config.discretization.fsp_substeps.max(monotone);
    if fsp > MAX_FSP_SUBSTEPS {
        warnings.push(format!(
            "fluid substeps capped at {MAX_FSP_SUBSTEPS} (monotonicity asks for {fsp})"
        ));
        fsp = MAX_FSP_SUBSTEPS;
    } else if fsp > config.discretization.fsp_substeps {
        warnings.push(format!(
            "fluid substeps raised from {} to {fsp} for a monotone Crank–Nicolson step",
            config.discretization.fsp_substeps
        ));
    }
    let stable = setup.system.stable_substeps();
    let wanted = match config.discretization.ssp_substeps {
        0 => stable.max(32),
        n => n.max(stable),
    };
    let mut ratio = wanted.div_ceil(fsp).max(4);
    ratio += ratio % 2;
    (
        Substeps {
            fsp,
            ssp: fsp * ratio,
        },
        warnings,
    )
}

fn levels_from(ctx: &FspContext, samples: &[crate::ssp::PlateSample], substeps: Substeps) -> Vec<GeometryLevel> {
    let half = substeps.ratio() / 2;
    (0..=2 * substeps.fsp)
        .map(|j| {
            let s = &samples[j * half];
            ctx.columns.level(s.t, &s.beta, &s.gamma)
        })
        .collect()
}

/// Hölder-¼ constant of min J in time over the ledger rows.
fn holder_constant(ledger: &[EnergyLedger]) -> f64 {
    let mut c: f64 = 0.0;
    for (i, a) in ledger.iter().enumerate() {
        for b in &ledger[i + 1..] {
            let dt = (b.t - a.t).abs();
            if dt > 0.0 {
                c = c.max((b.min_jacobian - a.min_jacobian).abs() / dt.powf(0.25));
            }
        }
    }
    c.max(1e-12)
}

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let setup = Setup::new(config)?;
    let (plate0, fluid0) = initial_states(config, &setup);
    run_with(config, &setup, plate0, fluid0)
}

/// Runs the splitting from explicit initial states.
pub fn run_with(config: &RunConfig, setup: &Setup, plate0: PlateState, fluid0: FluidState) -> Result<RunOutput> {
    let dt = config.dt();
    let k = config.discretization.k;
    let ctx = &setup.ctx;
    let floor = config.solver.collision_floor;
    fluid0.check()?;
    let level0 = ctx.columns.level(0.0, &plate0.beta, &plate0.gamma);
    if level0.min_jacobian() <= floor {
        return Err(Error::Config(format!(
            "initial displacement gives min jacobian {:.3e}, not above the collision floor {floor:.3e}",
            level0.min_jacobian()
        )));
    }
    let mut warnings = setup.warnings.clone();
    let (substeps, substep_warnings) = choose_substeps(config, setup, &plate0, &fluid0);
    warnings.extend(substep_warnings);
    let mut params = setup.params;
    params.substeps = substeps.fsp;

    let v0: Vec<f64> = fluid0.alpha[k..].to_vec();
    let v0_sq: f64 = v0.iter().map(|v| v * v).sum();
    let coercivity = setup.system.nonlinearity.coercivity_witness(config.domain.length);
    let korn = korn_constant(params.mu, params.lambda);

    let mut ledger = vec![compute_ledger(ctx, &setup.system, &params, &fluid0, &plate0)?];
    let energy_bound = ledger[0].total() + 0.25 * v0_sq + coercivity.1 + config.time.t_final * dt.sqrt();
    let mut snapshots = Vec::new();
    let cadence = config.output.cadence;
    if cadence > 0 {
        snapshots.push(DensitySnapshot {
            step: 0,
            t: 0.0,
            density: fluid0.r.clone(),
        });
    }

    let mut current = Handoff {
        plate: plate0,
        fluid: fluid0,
    };
    let mut trace = TraceHistory::Constant(v0);
    let mut windows: Vec<WindowRecord> = Vec::with_capacity(config.time.windows);
    let mut status = RunStatus::Completed;
    let mut penalty_sum = 0.0;
    let mut density_max: f64 = current.fluid.r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut jacobian_max = level0.jacobian_center.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut growth_max: f64 = 0.0;
    let mut flagged = std::collections::BTreeSet::new();
    let mut gap_total = 0.0;

    for n in 0..config.time.windows {
        let incoming = current.clone();
        handoff_validate(&current, &incoming).map_err(|e| e.in_window(n))?;
        let t_start = incoming.plate.t;
        let ssp = ssp_step(&setup.system, &incoming.plate, &trace, substeps.ssp).map_err(|e| e.in_window(n))?;
        let levels = levels_from(ctx, &ssp.samples, substeps);
        let (min_jacobian, at) = levels
            .iter()
            .map(|l| (l.min_jacobian(), l.t))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
        if min_jacobian <= floor {
            status = RunStatus::Collision {
                window: n,
                t: at,
                min_jacobian,
            };
            break;
        }
        let rannacher = n == 0 && config.solver.rannacher;
        let fsp = fsp_fixed_point(ctx, &params, &incoming.fluid, &levels, rannacher).map_err(|e| e.in_window(n))?;

        penalty_sum += ssp.report.penalty + fsp.energy.penalty;
        let mut row = compute_ledger(ctx, &setup.system, &params, &fsp.state, &ssp.state).map_err(|e| e.in_window(n))?;
        row.penalty_sum = penalty_sum;
        ledger.push(row);

        density_max = density_max.max(fsp.report.density_max);
        for l in &levels {
            jacobian_max = l.jacobian_center.iter().cloned().fold(jacobian_max, f64::max);
        }
        growth_max = growth_max.max(fsp.envelope.log_growth_pointwise);
        let admissibility = check_dt_admissibility(
            &AdmissibilityInputs {
                length: config.domain.length,
                area: config.domain.length,
                gamma: params.law.gamma,
                delta: params.law.delta,
                a: params.law.a,
                density_max,
                jacobian_max,
                korn_constant: korn,
                energy_bound,
                plate_frequency_max: setup.plate_basis.modes.last().map_or(0.0, |m| m.mu),
                divergence_growth: growth_max,
            },
            dt,
        );
        for a in &admissibility {
            if !a.satisfied && flagged.insert(a.condition) {
                warnings.push(format!(
                    "window {n}: time-step condition `{}` not met (margin {:.3e}, Δt limit {:.3e})",
                    a.condition, a.margin, a.dt_limit
                ));
            }
        }

        gap_total += fsp.energy.gap_sq;
        windows.push(WindowRecord {
            index: n,
            t_start,
            t_end: ssp.state.t,
            ssp: ssp.report,
            fixed_point: fsp.report.clone(),
            fsp_energy: fsp.energy,
            envelope: fsp.envelope,
            coupling_gap: fsp.energy.gap_sq.sqrt(),
            min_jacobian,
            mass_start: fsp.mass_start,
            mass_end: fsp.mass_end,
            ledger_row: ledger.len() - 1,
            admissibility,
        });
        if cadence > 0 && (n + 1) % cadence == 0 {
            snapshots.push(DensitySnapshot {
                step: n + 1,
                t: fsp.state.t,
                density: fsp.state.r.clone(),
            });
        }
        trace = TraceHistory::Sampled {
            t0: t_start,
            spacing: dt / substeps.fsp as f64,
            samples: fsp.trace_samples(),
        };
        current = Handoff {
            plate: ssp.state,
            fluid: fsp.state,
        };
    }

    let settings = VerdictSettings {
        dt,
        t_final: config.time.t_final,
        identity_tol: config.solver.identity_tol,
        envelope_inflation: ENVELOPE_INFLATION,
        mass_tol: MASS_TOLERANCE,
        closure: params.closure,
        coercivity,
        mu: params.mu,
        lambda: params.lambda,
        v0_sq,
    };
    let verdicts = inequality_verdicts(&windows, &ledger, &settings);
    let history = SampledHistory {
        times: ledger.iter().map(|l| l.t).collect(),
        values: ledger.iter().map(|l| l.min_jacobian).collect(),
    };
    let continuation = ContinuationPolicy {
        energy_constant: holder_constant(&ledger),
        floor,
        max_extensions: 10_000,
        horizon_cap: config.time.t_final,
    }
    .run(&history);

    Ok(RunOutput {
        config: config.clone(),
        status,
        substeps,
        windows,
        ledger,
        plate: current.plate,
        fluid: current.fluid,
        verdicts,
        coupling_gap: gap_total.sqrt(),
        korn_constant: korn,
        coercivity,
        energy_bound,
        continuation,
        snapshots,
        warnings,
    })
}
