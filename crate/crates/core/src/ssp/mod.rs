//! Structure sub-problem: plate and temperature modal ODEs on one window.

pub mod nonlinearity;

use nalgebra::DVector;
use serde::Serialize;

pub use nonlinearity::Nonlinearity;

use crate::bases::{CoupledMatrices, PlateTable};
use crate::error::{Error, Result};

/// Modal displacement, velocity and temperature at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateState {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub t: f64,
}

impl PlateState {
    pub fn zeros(k: usize, t: f64) -> Self {
        Self {
            beta: vec![0.0; k],
            gamma: vec![0.0; k],
            alpha: vec![0.0; k],
            t,
        }
    }

    pub fn k(&self) -> usize {
        self.beta.len()
    }

    pub fn is_finite(&self) -> bool {
        self.beta
            .iter()
            .chain(&self.gamma)
            .chain(&self.alpha)
            .all(|v| v.is_finite())
    }
}

/// Lagged fluid trace v on the previous window, sampled uniformly.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceHistory {
    /// First window: v frozen at its initial value.
    Constant(Vec<f64>),
    Sampled {
        t0: f64,
        spacing: f64,
        samples: Vec<Vec<f64>>,
    },
}

impl TraceHistory {
    /// T_Δt v at `t`, i.e. v(t - Δt), by linear interpolation.
    pub fn shifted(&self, t: f64, dt_window: f64, out: &mut [f64]) -> Result<()> {
        match self {
            Self::Constant(v) => {
                out.copy_from_slice(v);
                Ok(())
            }
            Self::Sampled { t0, spacing, samples } => {
                let s = (t - dt_window - t0) / spacing;
                let last = (samples.len() - 1) as f64;
                if s < -1e-9 || s > last + 1e-9 {
                    return Err(Error::Config(format!(
                        "trace history does not cover t - Δt = {}",
                        t - dt_window
                    )));
                }
                let s = s.clamp(0.0, last);
                let i = (s.floor() as usize).min(samples.len() - 2);
                let f = s - i as f64;
                for ((o, a), b) in out.iter_mut().zip(&samples[i]).zip(&samples[i + 1]) {
                    *o = (1.0 - f) * a + f * b;
                }
                Ok(())
            }
        }
    }
}

/// Everything the right-hand side needs besides the state.
#[derive(Debug, Clone)]
pub struct SspSystem {
    pub table: PlateTable,
    pub mats: CoupledMatrices,
    pub nonlinearity: Nonlinearity,
    pub delta: f64,
    pub dt_window: f64,
}

/// Time derivative (β̇, γ̇, α̇).
#[derive(Debug, Clone, PartialEq)]
pub struct PlateRate {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl SspSystem {
    pub fn k(&self) -> usize {
        self.mats.xi_plate.len()
    }

    pub fn rhs(&self, state: &PlateState, v_shift: &[f64]) -> Result<PlateRate> {
        let k = self.k();
        for (context, len) in [
            ("plate displacement", state.beta.len()),
            ("plate velocity", state.gamma.len()),
            ("temperature", state.alpha.len()),
            ("shifted trace", v_shift.len()),
        ] {
            if len != k {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: k,
                    got: len,
                });
            }
        }
        let (b, g, a) = (&state.beta, &state.gamma, &state.alpha);
        let mut gdot = vec![0.0; k];
        let mut adot = vec![0.0; k];
        self.rates(b, g, a, v_shift, &mut gdot, &mut adot);
        Ok(PlateRate {
            beta: g.clone(),
            gamma: gdot,
            alpha: adot,
        })
    }

    fn rates(&self, b: &[f64], g: &[f64], a: &[f64], v: &[f64], gdot: &mut [f64], adot: &mut [f64]) {
        let k = self.k();
        let force = self.nonlinearity.force(b, &self.table);
        let m = &self.mats.coupling;
        let e = &self.mats.regularizer;
        for j in 0..k {
            let mut heat = 0.0;
            let mut reg = 0.0;
            for i in 0..k {
                heat += m[(i, j)] * a[i];
                reg += e[(j, i)] * b[i];
            }
            gdot[j] = -(g[j] - v[j]) / self.dt_window - 2.0 * self.mats.xi_plate[j] * b[j]
                + 2.0 * heat
                - 2.0 * force[j]
                - 2.0 * self.delta * reg;
        }
        for i in 0..k {
            let mut drive = 0.0;
            for j in 0..k {
                drive += m[(i, j)] * g[j];
            }
            adot[i] = -self.mats.xi_heat[i] * a[i] - drive;
        }
    }

    /// S = ¼|γ|² + ½Σξβ² + Π + ½|α|² + ½δ βᵀEβ.
    pub fn energy(&self, state: &PlateState) -> f64 {
        let b = DVector::from_column_slice(&state.beta);
        let bending: f64 = self
            .mats
            .xi_plate
            .iter()
            .zip(&state.beta)
            .map(|(x, b)| x * b * b)
            .sum();
        0.25 * sq(&state.gamma)
            + 0.5 * bending
            + self.nonlinearity.potential(&state.beta, &self.table)
            + 0.5 * sq(&state.alpha)
            + 0.5 * self.delta * b.dot(&(&self.mats.regularizer * &b))
    }

    /// Heat dissipation rate Σ ξ^h α².
    pub fn dissipation_rate(&self, alpha: &[f64]) -> f64 {
        self.mats
            .xi_heat
            .iter()
            .zip(alpha)
            .map(|(x, a)| x * a * a)
            .sum()
    }

    /// Substeps that keep explicit RK4 well inside its stability region.
    pub fn stable_substeps(&self) -> usize {
        let k = self.k();
        let reg = self.mats.regularizer.diagonal().max();
        let omega = (2.0 * (self.mats.xi_plate[k - 1] + self.delta * reg)).sqrt();
        let rate = omega
            .max(1.0 / self.dt_window)
            .max(self.mats.xi_heat[k - 1]);
        (self.dt_window * rate).ceil() as usize
    }
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// One dense sample of the plate trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateSample {
    pub t: f64,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
}

/// Energy bookkeeping of one window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SspEnergyReport {
    pub energy_start: f64,
    pub energy_end: f64,
    /// ∫ Σ ξ^h α².
    pub heat_dissipation: f64,
    /// (1/4Δt) ∫ |γ - T v|² + |γ|².
    pub penalty: f64,
    /// (1/4Δt) ∫ |T v|².
    pub trace_work: f64,
    /// ∫ |γ - T v|².
    pub lag_gap_sq: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SspWindow {
    pub state: PlateState,
    /// Samples at every substep, both ends included.
    pub samples: Vec<PlateSample>,
    pub report: SspEnergyReport,
}

/// Integrates the window [t_start, t_start + Δt] with classical RK4.
///
/// The dissipation and penalty integrals ride along as extra state so the
/// energy residual reflects the integrator's order.
pub fn ssp_step(
    system: &SspSystem,
    state_in: &PlateState,
    trace: &TraceHistory,
    substeps: usize,
) -> Result<SspWindow> {
    let k = system.k();
    if state_in.k() != k {
        return Err(Error::DimensionMismatch {
            context: "plate state",
            expected: k,
            got: state_in.k(),
        });
    }
    let substeps = substeps.max(1);
    let h = system.dt_window / substeps as f64;
    let t0 = state_in.t;
    let n = 3 * k + 4;
    let mut y = vec![0.0; n];
    y[..k].copy_from_slice(&state_in.beta);
    y[k..2 * k].copy_from_slice(&state_in.gamma);
    y[2 * k..3 * k].copy_from_slice(&state_in.alpha);

    let mut v = vec![0.0; k];
    let mut deriv = |t: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
        trace.shifted(t, system.dt_window, &mut v)?;
        let (b, rest) = y.split_at(k);
        let (g, rest) = rest.split_at(k);
        let a = &rest[..k];
        let (ob, rest) = out.split_at_mut(k);
        let (og, rest) = rest.split_at_mut(k);
        let (oa, extra) = rest.split_at_mut(k);
        ob.copy_from_slice(g);
        system.rates(b, g, a, &v, og, oa);
        let gap: f64 = g.iter().zip(&v).map(|(g, v)| (g - v).powi(2)).sum();
        extra[0] = system.dissipation_rate(a);
        extra[1] = (gap + sq(g)) / (4.0 * system.dt_window);
        extra[2] = sq(&v) / (4.0 * system.dt_window);
        extra[3] = gap;
        Ok(())
    };

    let to_sample = |t: f64, y: &[f64]| PlateSample {
        t,
        beta: y[..k].to_vec(),
        gamma: y[k..2 * k].to_vec(),
        alpha: y[2 * k..3 * k].to_vec(),
    };
    let mut samples = Vec::with_capacity(substeps + 1);
    samples.push(to_sample(t0, &y));
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for step in 0..substeps {
        let t = t0 + step as f64 * h;
        deriv(t, &y, &mut k1)?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        deriv(t + 0.5 * h, &tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        deriv(t + 0.5 * h, &tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        deriv(t + h, &tmp, &mut k4)?;
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("plate state"));
        }
        let t_next = if step + 1 == substeps {
            t0 + system.dt_window
        } else {
            t0 + (step + 1) as f64 * h
        };
        samples.push(to_sample(t_next, &y));
    }
    let last = samples.last().expect("at least one sample");
    let state = PlateState {
        beta: last.beta.clone(),
        gamma: last.gamma.clone(),
        alpha: last.alpha.clone(),
        t: last.t,
    };
    let energy_start = system.energy(state_in);
    let energy_end = system.energy(&state);
    let (heat_dissipation, penalty, trace_work, lag_gap_sq) = (y[3 * k], y[3 * k + 1], y[3 * k + 2], y[3 * k + 3]);
    let report = SspEnergyReport {
        energy_start,
        energy_end,
        heat_dissipation,
        penalty,
        trace_work,
        lag_gap_sq,
        residual: energy_end + heat_dissipation + penalty - energy_start - trace_work,
    };
    Ok(SspWindow {
        state,
        samples,
        report,
    })
}
