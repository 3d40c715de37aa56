//! Parameter sweeps over run configurations and the Cauchy tables built on
//! their final states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{parameter_paths, RunConfig};
use crate::driver::{run, RunOutput};
use crate::error::{Error, Result};

/// Scalar tabulated per sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Plate plus fluid energy at the final time.
    FinalEnergy,
    /// ‖v - ∂t w‖ in L²((0, T) × Γ).
    CouplingGap,
    /// ∫ J r ln r at the final time.
    Entropy,
    /// Largest relative per-window change of ∫ J r.
    MassDrift,
}

impl Reduction {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FinalEnergy => "final_energy",
            Self::CouplingGap => "coupling_gap",
            Self::Entropy => "entropy",
            Self::MassDrift => "mass_drift",
        }
    }

    pub fn evaluate(&self, out: &RunOutput) -> f64 {
        let last = out.ledger.last().expect("ledger has the initial row");
        match self {
            Self::FinalEnergy => last.total(),
            Self::CouplingGap => out.coupling_gap,
            Self::Entropy => last.entropy,
            Self::MassDrift => out.max_mass_drift(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dotted parameter path such as `time.windows`.
    pub parameter: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    /// Configuration shared by all points, in the run-file layout.
    #[serde(default)]
    pub base: toml::Table,
    pub axes: Vec<Axis>,
    pub reduction: Reduction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub assignments: Vec<(String, toml::Value)>,
    pub config: RunConfig,
}

impl SweepPlan {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let plan: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Config("sweep plan needs at least one axis".into()));
        }
        let known = parameter_paths();
        for axis in &self.axes {
            if !known.contains(&axis.parameter) {
                return Err(Error::Config(format!("unknown sweep parameter `{}`", axis.parameter)));
            }
            if axis.values.is_empty() {
                return Err(Error::Config(format!("axis `{}` has no values", axis.parameter)));
            }
        }
        self.points().map(|_| ())
    }

    /// Cartesian product of the axes, first axis slowest.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let base = toml::to_string(&self.base).map_err(|e| Error::Config(e.to_string()))?;
        let total: usize = self.axes.iter().map(|a| a.values.len()).product();
        let mut out = Vec::with_capacity(total);
        for index in 0..total {
            let mut rest = index;
            let mut assignments = vec![(String::new(), toml::Value::Boolean(false)); self.axes.len()];
            for (slot, axis) in self.axes.iter().enumerate().rev() {
                let n = axis.values.len();
                assignments[slot] = (axis.parameter.clone(), axis.values[rest % n].clone());
                rest /= n;
            }
            let config = RunConfig::from_toml_with_overrides(&base, &assignments)
                .map_err(|e| Error::Config(format!("sweep point {index}: {e}")))?;
            out.push(SweepPoint {
                index,
                assignments,
                config,
            });
        }
        Ok(out)
    }
}

/// Final state of a run, in a form that can be compared across
/// resolutions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinalState {
    pub length: f64,
    pub k: usize,
    pub nx: usize,
    pub nz: usize,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
    /// Interior block then lifting block, k entries each.
    pub fluid: Vec<f64>,
    pub density: Vec<f64>,
}

impl FinalState {
    pub fn from_run(out: &RunOutput) -> Self {
        let d = &out.config.discretization;
        Self {
            length: out.config.domain.length,
            k: d.k,
            nx: d.nx,
            nz: d.nz,
            beta: out.plate.beta.clone(),
            gamma: out.plate.gamma.clone(),
            theta: out.plate.alpha.clone(),
            fluid: out.fluid.alpha.clone(),
            density: out.fluid.r.clone(),
        }
    }

    /// Restriction to `k` modes and an (nx, nz) grid that divides this one.
    pub fn project(&self, k: usize, nx: usize, nz: usize) -> Result<Self> {
        if k > self.k || nx == 0 || nz == 0 || !self.nx.is_multiple_of(nx) || !self.nz.is_multiple_of(nz) {
            return Err(Error::IncompatibleResolution(format!(
                "cannot restrict k = {}, {}×{} to k = {k}, {nx}×{nz}",
                self.k, self.nx, self.nz
            )));
        }
        let (bx, bz) = (self.nx / nx, self.nz / nz);
        let mut density = vec![0.0; nx * nz];
        for j in 0..self.nz {
            for i in 0..self.nx {
                density[(j / bz) * nx + i / bx] += self.density[j * self.nx + i] / (bx * bz) as f64;
            }
        }
        let mut fluid = self.fluid[..k].to_vec();
        fluid.extend_from_slice(&self.fluid[self.k..self.k + k]);
        Ok(Self {
            length: self.length,
            k,
            nx,
            nz,
            beta: self.beta[..k].to_vec(),
            gamma: self.gamma[..k].to_vec(),
            theta: self.theta[..k].to_vec(),
            fluid,
            density,
        })
    }

    /// Modal Euclidean distance plus the L² distance of the densities.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.k != other.k || self.nx != other.nx || self.nz != other.nz || self.length != other.length {
            return Err(Error::IncompatibleResolution("states differ in representation".into()));
        }
        let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        let area = self.length / (self.nx * self.nz) as f64;
        Ok((sq(&self.beta, &other.beta)
            + sq(&self.gamma, &other.gamma)
            + sq(&self.theta, &other.theta)
            + sq(&self.fluid, &other.fluid)
            + area * sq(&self.density, &other.density))
        .sqrt())
    }
}

/// Coarsest representation shared by all states.
pub fn common_projection(states: &[FinalState]) -> Result<Vec<FinalState>> {
    let k = states.iter().map(|s| s.k).min().unwrap_or(0);
    let nx = states.iter().map(|s| s.nx).min().unwrap_or(0);
    let nz = states.iter().map(|s| s.nz).min().unwrap_or(0);
    if states.iter().any(|s| s.length != states[0].length) {
        return Err(Error::IncompatibleResolution("states live on different domains".into()));
    }
    states.iter().map(|s| s.project(k, nx, nz)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyRow {
    pub from: f64,
    pub to: f64,
    pub difference: f64,
    /// ln(d_{j-1}/d_j) / |ln(p_j/p_{j-1})|, from the second row on.
    pub order: Option<f64>,
}

/// Successive differences along an axis with parameters `params` and any
/// scalar or state distance `distance(j, j+1)`.
pub fn cauchy_rows(params: &[f64], distance: impl Fn(usize, usize) -> Result<f64>) -> Result<Vec<CauchyRow>> {
    if params.len() < 3 {
        return Err(Error::Config(format!(
            "a Cauchy table needs at least 3 points (got {})",
            params.len()
        )));
    }
    let mut rows: Vec<CauchyRow> = Vec::with_capacity(params.len() - 1);
    for j in 0..params.len() - 1 {
        let difference = distance(j, j + 1)?;
        let order = rows.last().and_then(|prev| {
            let ratio = prev.difference / difference;
            let step = (params[j] / params[j - 1]).ln().abs();
            (ratio.is_finite() && ratio > 0.0 && step > 0.0).then(|| ratio.ln() / step)
        });
        rows.push(CauchyRow {
            from: params[j],
            to: params[j + 1],
            difference,
            order,
        });
    }
    Ok(rows)
}

/// Cauchy table of final states along one axis.
pub fn cauchy_table(params: &[f64], states: &[FinalState]) -> Result<Vec<CauchyRow>> {
    if params.len() != states.len() {
        return Err(Error::DimensionMismatch {
            context: "cauchy table",
            expected: params.len(),
            got: states.len(),
        });
    }
    let projected = common_projection(states)?;
    cauchy_rows(params, |a, b| projected[a].distance(&projected[b]))
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: SweepPoint,
    pub outcome: std::result::Result<RunOutput, String>,
}

impl PointResult {
    pub fn value(&self, reduction: Reduction) -> f64 {
        match &self.outcome {
            Ok(out) => reduction.evaluate(out),
            Err(_) => f64::NAN,
        }
    }
}

/// Runs every point on a pool of `jobs` workers (all cores when `None`).
/// Results come back in point order whatever the execution order.
pub fn run_sweep(plan: &SweepPlan, jobs: Option<usize>) -> Result<Vec<PointResult>> {
    let points = plan.points()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        points
            .into_par_iter()
            .map(|point| {
                let outcome = run(&point.config).map_err(|e| e.to_string());
                PointResult { point, outcome }
            })
            .collect()
    }))
}

/// Numeric value of a sweep assignment, for order estimates.
pub fn numeric(value: &toml::Value) -> Option<f64> {
    match value {
        toml::Value::Integer(i) => Some(*i as f64),
        toml::Value::Float(f) => Some(*f),
        _ => None,
    }
}
