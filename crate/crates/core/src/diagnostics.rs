//! Energy functionals, dissipation rates and the verdicts built from them.

use nalgebra::DVector;
use serde::Serialize;

use crate::driver::WindowRecord;
use crate::error::{Error, Result};
use crate::fsp::continuity::damping_dissipation;
use crate::fsp::momentum::{jr_field, viscous_matrix, weighted_gram};
use crate::fsp::{CellGrid, FluidState, FspContext, FspParams, TopClosure};
use crate::ssp::{PlateState, SspSystem};

/// Every energy and dissipation functional at one sample time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EnergyLedger {
    pub t: f64,
    /// ½ ∫ J r |U|².
    pub kinetic: f64,
    /// ∫ J r^γ / (γ-1).
    pub internal: f64,
    /// δ ∫ J r^a / (a-1).
    pub artificial_internal: f64,
    /// ¼ ‖∂t w‖², the convention of the split plate energy.
    pub plate_kinetic_quarter: f64,
    /// ½ ‖∂t w‖², the convention of the continuous energy.
    pub plate_kinetic_half: f64,
    /// ½ ‖Δw‖².
    pub bending: f64,
    pub potential: f64,
    /// ½ ‖θ‖².
    pub heat: f64,
    /// ½ δ ‖∇³w‖².
    pub regularizer: f64,
    /// μ ∫ J|∇^w U|² + (μ+λ) ∫ J (∇^w·U)².
    pub viscous_rate: f64,
    /// ∫ J |∇^w U|².
    pub gradient_sq: f64,
    /// ∫ J (∇^w·U)².
    pub divergence_sq: f64,
    /// ‖∇θ‖².
    pub heat_dissipation_rate: f64,
    /// ε ∫ J |∇r|² (γ r^{γ-2} + δ a r^{a-2}).
    pub damping_rate: f64,
    /// Cumulative penalty integrals of both sub-problems up to `t`.
    pub penalty_sum: f64,
    /// ∫ J r ln r.
    pub entropy: f64,
    /// ∫ J r.
    pub mass: f64,
    pub min_jacobian: f64,
    /// Plate plus fluid energy evaluated directly from the state.
    pub total_direct: f64,
}

impl EnergyLedger {
    /// S with the ¼ kinetic convention.
    pub fn plate_energy(&self) -> f64 {
        self.plate_kinetic_quarter + self.bending + self.potential + self.heat + self.regularizer
    }

    /// F = kinetic plus both internal energies.
    pub fn fluid_energy(&self) -> f64 {
        self.kinetic + self.internal + self.artificial_internal
    }

    pub fn total(&self) -> f64 {
        self.plate_energy() + self.fluid_energy()
    }

    pub const CSV_HEADER: &'static str = "t,kinetic,internal,artificial_internal,plate_kinetic_quarter,plate_kinetic_half,bending,potential,heat,regularizer,viscous_rate,gradient_sq,divergence_sq,heat_dissipation_rate,damping_rate,penalty_sum,entropy,mass,min_jacobian,total";

    pub fn csv_row(&self) -> String {
        [
            self.t,
            self.kinetic,
            self.internal,
            self.artificial_internal,
            self.plate_kinetic_quarter,
            self.plate_kinetic_half,
            self.bending,
            self.potential,
            self.heat,
            self.regularizer,
            self.viscous_rate,
            self.gradient_sq,
            self.divergence_sq,
            self.heat_dissipation_rate,
            self.damping_rate,
            self.penalty_sum,
            self.entropy,
            self.mass,
            self.min_jacobian,
            self.total(),
        ]
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// ∫ J r ln r on the cell grid.
pub fn entropy_monitor(grid: &CellGrid, r: &[f64], jacobian_columns: &[f64]) -> Result<f64> {
    let area = grid.area();
    let mut total = 0.0;
    for (c, &v) in r.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::NonPositiveDensity { min: v, cell: c });
        }
        total += area * jacobian_columns[c % grid.nx] * v * v.ln();
    }
    Ok(total)
}

fn quadratic(m: &nalgebra::DMatrix<f64>, a: &[f64]) -> f64 {
    let v = DVector::from_column_slice(a);
    v.dot(&(m * &v))
}

pub fn compute_ledger(
    ctx: &FspContext,
    system: &SspSystem,
    params: &FspParams,
    fluid: &FluidState,
    plate: &PlateState,
) -> Result<EnergyLedger> {
    fluid.check()?;
    let grid = &ctx.grid;
    let law = params.law;
    let level = ctx.columns.level(plate.t, &plate.beta, &plate.gamma);
    let jac = &level.jacobian_center;
    let area = grid.area();
    let mass_matrix = weighted_gram(grid, &ctx.tables, &jr_field(grid, &fluid.r, jac));
    let (mut internal, mut artificial) = (0.0, 0.0);
    for (c, &r) in fluid.r.iter().enumerate() {
        let w = area * jac[c % grid.nx];
        internal += w * r.powf(law.gamma) / (law.gamma - 1.0);
        artificial += w * law.delta * r.powf(law.a) / (law.a - 1.0);
    }
    let gamma_sq: f64 = plate.gamma.iter().map(|g| g * g).sum();
    let bending = 0.5
        * system
            .mats
            .xi_plate
            .iter()
            .zip(&plate.beta)
            .map(|(x, b)| x * b * b)
            .sum::<f64>();
    let beta = DVector::from_column_slice(&plate.beta);
    let regularizer = 0.5 * system.delta * beta.dot(&(&system.mats.regularizer * &beta));
    let alpha = &fluid.alpha;
    let kinetic = 0.5 * quadratic(&mass_matrix, alpha);
    let ledger = EnergyLedger {
        t: plate.t,
        kinetic,
        internal,
        artificial_internal: artificial,
        plate_kinetic_quarter: 0.25 * gamma_sq,
        plate_kinetic_half: 0.5 * gamma_sq,
        bending,
        potential: system.nonlinearity.potential(&plate.beta, &system.table),
        heat: 0.5 * plate.alpha.iter().map(|a| a * a).sum::<f64>(),
        regularizer,
        viscous_rate: quadratic(&viscous_matrix(grid, &ctx.tables, &level, params.mu, params.lambda), alpha),
        gradient_sq: quadratic(&viscous_matrix(grid, &ctx.tables, &level, 1.0, -1.0), alpha),
        divergence_sq: quadratic(&viscous_matrix(grid, &ctx.tables, &level, 0.0, 1.0), alpha),
        heat_dissipation_rate: system.dissipation_rate(&plate.alpha),
        damping_rate: damping_dissipation(grid, &level, &fluid.r, params.eps, |r| law.enthalpy(r)),
        penalty_sum: 0.0,
        entropy: entropy_monitor(grid, &fluid.r, jac)?,
        mass: grid.weighted_mass(&fluid.r, jac),
        min_jacobian: level.min_jacobian(),
        total_direct: system.energy(plate)
            + kinetic
            + fluid
                .r
                .iter()
                .enumerate()
                .map(|(c, &r)| area * jac[c % grid.nx] * law.internal(r))
                .sum::<f64>(),
    };
    Ok(ledger)
}

/// Constant c(λ, μ) with c ‖∇u‖² ≤ μ‖∇u‖² + (μ+λ)‖∇·u‖² for planar fields.
///
/// When μ+λ < 0 the bound (∇·u)² ≤ 2|∇u|² gives c = μ + 2(μ+λ), which is
/// positive whenever λ > -3μ/2.
pub fn korn_constant(mu: f64, lambda: f64) -> f64 {
    if lambda >= -mu {
        mu
    } else {
        mu + 2.0 * (mu + lambda)
    }
}

/// One checked inequality or identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: &'static str,
    pub passed: bool,
    /// Slack of the inequality; negative when violated.
    pub margin: f64,
    pub detail: String,
}

impl Verdict {
    fn from_margin(name: &'static str, margin: f64, detail: String) -> Self {
        Self {
            name,
            passed: margin >= 0.0,
            margin,
            detail,
        }
    }
}

/// Korn-type lower bound on every ledger row.
pub fn korn_like_lower_bound(ledgers: &[EnergyLedger], mu: f64, lambda: f64) -> Verdict {
    let c = korn_constant(mu, lambda);
    let margin = ledgers
        .iter()
        .map(|l| l.viscous_rate - c * l.gradient_sq + 1e-12 * l.viscous_rate.abs())
        .fold(f64::INFINITY, f64::min);
    Verdict::from_margin("korn_lower_bound", margin, format!("c(λ, μ) = {c}"))
}

/// Telescoped bound at one window boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelescopedRow {
    pub window: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Left side: S(m) + F(m) + dissipation sums + (1/4Δt)∫[|∂t w - T v|² +
/// ½|v - ∂t w|²] + (1/4Δt)∫_{last window}|v|². Right side: the initial
/// energy with ¼|v(0)|², the coercivity constant, T √Δt and the measured
/// residuals, including the mismatch between the quadratures of the two
/// sub-problems in the terms that telescope.
pub fn telescoped_bound(
    records: &[WindowRecord],
    v0_sq: f64,
    dt: f64,
    t_final: f64,
    c_star: f64,
) -> Vec<TelescopedRow> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let base = first.ssp.energy_start + first.fsp_energy.energy_start + 0.25 * v0_sq + c_star + t_final * dt.sqrt();
    let mut dissipation = 0.0;
    let mut lag = 0.0;
    let mut residual = 0.0;
    let mut mismatch = 0.0;
    let mut v_sq_prev = dt * v0_sq;
    let mut rows = Vec::with_capacity(records.len());
    for rec in records {
        let s = &rec.ssp;
        let f = &rec.fsp_energy;
        let v_sq = 4.0 * dt * f.penalty - f.gap_sq;
        let exchanged = s.penalty - s.trace_work + f.penalty - f.plate_work;
        let split = (s.lag_gap_sq + f.gap_sq + v_sq - v_sq_prev) / (4.0 * dt);
        mismatch += (exchanged - split).abs();
        residual += s.residual.abs() + f.residual.abs();
        dissipation += s.heat_dissipation + f.viscous + f.damping;
        lag += (s.lag_gap_sq + 0.5 * f.gap_sq) / (4.0 * dt);
        rows.push(TelescopedRow {
            window: rec.index,
            lhs: s.energy_end + f.energy_end + dissipation + lag + v_sq / (4.0 * dt),
            rhs: base + residual + mismatch,
        });
        v_sq_prev = v_sq;
    }
    rows
}

/// Settings the verdicts depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictSettings {
    pub dt: f64,
    pub t_final: f64,
    pub identity_tol: f64,
    pub envelope_inflation: f64,
    pub mass_tol: f64,
    pub closure: TopClosure,
    /// (κ, C*) of the coercivity assumption.
    pub coercivity: (f64, f64),
    pub mu: f64,
    pub lambda: f64,
    /// |v(0)|².
    pub v0_sq: f64,
}

pub fn inequality_verdicts(records: &[WindowRecord], ledgers: &[EnergyLedger], settings: &VerdictSettings) -> Vec<Verdict> {
    let mut out = Vec::new();
    let scale = ledgers.first().map_or(0.0, |l| l.plate_energy()) + 1.0;
    let worst = |f: &dyn Fn(&WindowRecord) -> f64| records.iter().map(f).fold(f64::NEG_INFINITY, f64::max);

    let ssp = worst(&|r| r.ssp.residual.abs()).max(0.0);
    out.push(Verdict::from_margin(
        "ssp_energy_identity",
        settings.identity_tol * scale - ssp,
        format!("max |residual| {ssp:.3e}"),
    ));

    let fsp = records
        .iter()
        .map(|r| r.fsp_energy.inequality_margin(settings.dt))
        .fold(f64::INFINITY, f64::min);
    let fsp_residual = worst(&|r| r.fsp_energy.residual.abs()).max(0.0);
    out.push(Verdict::from_margin(
        "fsp_energy_inequality",
        fsp,
        format!("max |identity residual| {fsp_residual:.3e}"),
    ));

    let rows = telescoped_bound(records, settings.v0_sq, settings.dt, settings.t_final, settings.coercivity.1);
    let tele = rows.iter().map(|r| r.rhs - r.lhs).fold(f64::INFINITY, f64::min);
    out.push(Verdict::from_margin(
        "telescoped_bound",
        tele,
        format!("{} window boundaries", rows.len()),
    ));

    let (kappa, c_star) = settings.coercivity;
    let coercive = ledgers
        .iter()
        .map(|l| 2.0 * kappa * l.bending + l.potential + c_star)
        .fold(f64::INFINITY, f64::min);
    out.push(Verdict::from_margin(
        "coercivity",
        coercive,
        format!("κ = {kappa}, C* = {c_star}"),
    ));

    out.push(korn_like_lower_bound(ledgers, settings.mu, settings.lambda));

    let density_min = records
        .iter()
        .map(|r| r.fixed_point.density_min)
        .fold(f64::INFINITY, f64::min);
    out.push(Verdict::from_margin(
        "density_positivity",
        density_min,
        format!("min density {density_min:.6e}"),
    ));

    let excess = worst(&|r| r.envelope.excess(settings.envelope_inflation));
    out.push(Verdict::from_margin(
        "density_envelope",
        -excess,
        format!("inflation {:e}", settings.envelope_inflation),
    ));

    let drift = worst(&|r| r.mass_drift());
    out.push(match settings.closure {
        TopClosure::Conservative => Verdict::from_margin(
            "mass_conservation",
            settings.mass_tol - drift,
            format!("max relative drift per window {drift:.3e}"),
        ),
        TopClosure::Outflow => Verdict {
            name: "mass_conservation",
            passed: true,
            margin: f64::INFINITY,
            detail: format!("outflow closure exchanges mass through the top edge (drift {drift:.3e})"),
        },
    });
    // Empty runs have nothing to violate.
    for v in &mut out {
        if records.is_empty() {
            v.passed = true;
            v.margin = f64::INFINITY;
        }
    }
    out
}
