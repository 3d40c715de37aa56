//! Time-step smallness conditions evaluated with constants measured on the run.
//!
//! The conditions are sufficient for the existence argument, not necessary
//! for the scheme, so violations are reported as warnings.

use serde::Serialize;

/// Measured quantities the conditions depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityInputs {
    pub length: f64,
    /// Area of the reference fluid domain.
    pub area: f64,
    pub gamma: f64,
    pub delta: f64,
    pub a: f64,
    /// Running maximum of the density, C_r.
    pub density_max: f64,
    /// Running maximum of J.
    pub jacobian_max: f64,
    /// Lower constant of the viscous form.
    pub korn_constant: f64,
    /// Energy bound C(E0).
    pub energy_bound: f64,
    /// Largest plate frequency μ_k of the basis.
    pub plate_frequency_max: f64,
    /// Largest per-window ∫ sup |∇^w·U| dt.
    pub divergence_growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility {
    pub condition: &'static str,
    pub satisfied: bool,
    /// Right minus left side; positive when satisfied.
    pub margin: f64,
    /// Largest Δt satisfying the condition with the same constants.
    pub dt_limit: f64,
}

/// Pressure trace constant C(C_r, δ) = √L (C_r^γ + δ C_r^a).
pub fn pressure_trace_constant(inputs: &AdmissibilityInputs) -> f64 {
    let cr = inputs.density_max;
    inputs.length.sqrt() * (cr.powf(inputs.gamma) + inputs.delta * cr.powf(inputs.a))
}

/// Constant C(k, E0, δ) of the trace-regularity condition: the inverse
/// inequality ‖f‖_{H^½} ≤ √μ_k ‖f‖_{L²} on the plate span times the
/// √(8 C(E0)) bound on the penalized gap.
pub fn trace_regularity_constant(inputs: &AdmissibilityInputs) -> f64 {
    (inputs.plate_frequency_max * 8.0 * inputs.energy_bound).sqrt()
}

pub fn check_dt_admissibility(inputs: &AdmissibilityInputs, dt: f64) -> Vec<Admissibility> {
    let mut out = Vec::with_capacity(4);

    let c = pressure_trace_constant(inputs);
    let lhs = 8.0 * c * c * dt.sqrt();
    out.push(Admissibility {
        condition: "pressure_trace",
        satisfied: lhs <= 1.0,
        margin: 1.0 - lhs,
        dt_limit: (1.0 / (8.0 * c * c)).powi(2),
    });

    let ck = trace_regularity_constant(inputs);
    let lhs = dt.sqrt() * ck;
    out.push(Admissibility {
        condition: "trace_regularity",
        satisfied: lhs <= 1.0,
        margin: 1.0 - lhs,
        dt_limit: (1.0 / ck).powi(2),
    });

    // The growth is measured as ∫ sup|div| over a window, i.e. Δt times the
    // window's sup, so the limit rescales it to a rate first.
    let growth = inputs.divergence_growth.exp();
    let rate = inputs.divergence_growth / dt;
    out.push(Admissibility {
        condition: "density_growth",
        satisfied: growth <= 2.0,
        margin: 2.0 - growth,
        dt_limit: if rate > 0.0 { std::f64::consts::LN_2 / rate } else { f64::INFINITY },
    });

    let cr = inputs.density_max;
    let pressure_max = cr.powf(inputs.gamma).max(inputs.delta * cr.powf(inputs.a));
    let coefficient = 6.0 * pressure_max * inputs.jacobian_max * inputs.area / inputs.korn_constant;
    out.push(Admissibility {
        condition: "pressure_work",
        satisfied: coefficient * dt <= inputs.energy_bound,
        margin: inputs.energy_bound - coefficient * dt,
        dt_limit: inputs.energy_bound / coefficient,
    });
    out
}
