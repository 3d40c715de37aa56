//! Run configuration: a TOML document with one table per concern.
//!
//! Unknown keys are rejected. Every field has a default, so an empty file is
//! the demo configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsp::{PressureLaw, TopClosure};
use crate::ssp::Nonlinearity;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Domain {
    /// Plate length L.
    pub length: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self { length: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Time {
    pub t_final: f64,
    /// Number of splitting windows N; Δt = t_final / N.
    pub windows: usize,
}

impl Default for Time {
    fn default() -> Self {
        Self {
            t_final: 0.2,
            windows: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Discretization {
    /// Galerkin size k (the fluid basis has 2k functions).
    pub k: usize,
    pub nx: usize,
    pub nz: usize,
    /// Fluid substeps per window; raised automatically when the
    /// Crank–Nicolson explicit half would lose monotonicity.
    pub fsp_substeps: usize,
    /// Structure substeps per window; 0 selects the automatic count.
    pub ssp_substeps: usize,
    /// Gauss points per panel for plate integrals.
    pub quadrature_order: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            k: 4,
            nx: 32,
            nz: 16,
            fsp_substeps: 16,
            ssp_substeps: 0,
            quadrature_order: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fluid {
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub a: f64,
    pub top_closure: TopClosure,
}

impl Default for Fluid {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            mu: 0.1,
            lambda: 0.0,
            epsilon: 0.05,
            delta: 0.01,
            a: 9.0,
            top_closure: TopClosure::Conservative,
        }
    }
}

impl Fluid {
    pub fn law(&self) -> PressureLaw {
        PressureLaw {
            gamma: self.gamma,
            delta: self.delta,
            a: self.a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Plate {
    /// One of `linear_zero`, `cubic_quasilinear`, `berger_type`.
    pub nonlinearity: String,
    pub berger_q1: f64,
    pub berger_q2: f64,
}

impl Default for Plate {
    fn default() -> Self {
        Self {
            nonlinearity: "cubic_quasilinear".into(),
            berger_q1: 1.0,
            berger_q2: 0.0,
        }
    }
}

impl Plate {
    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        Nonlinearity::from_selector(&self.nonlinearity, self.berger_q1, self.berger_q2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Initial {
    /// Mean density.
    pub density: f64,
    /// Amplitude of a cos(πx/L) cos(πz) density perturbation.
    pub density_wave: f64,
    /// Amplitude of seeded cellwise density noise (clipped and mollified).
    pub density_noise: f64,
    /// Modal plate displacement β(0); missing entries are zero.
    pub plate_displacement: Vec<f64>,
    /// Modal plate velocity β̇(0).
    pub plate_velocity: Vec<f64>,
    /// Modal temperature.
    pub temperature: Vec<f64>,
    /// Modal fluid velocity (2k entries at most).
    pub fluid_velocity: Vec<f64>,
}

impl Default for Initial {
    fn default() -> Self {
        Self {
            density: 1.0,
            density_wave: 0.0,
            density_noise: 0.0,
            plate_displacement: vec![0.01],
            plate_velocity: vec![],
            temperature: vec![],
            fluid_velocity: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Solver {
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub collision_floor: f64,
    /// Implicit-Euler startup for the first continuity substep.
    pub rannacher: bool,
    /// Tolerance for the per-window energy identity verdicts, relative to
    /// the initial energy plus one.
    pub identity_tol: f64,
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            picard_tol: 1e-10,
            picard_max_iter: 50,
            collision_floor: crate::geometry::DEFAULT_COLLISION_FLOOR,
            rannacher: true,
            identity_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    /// Write a density snapshot every `cadence` windows (0 disables).
    pub cadence: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub domain: Domain,
    pub time: Time,
    pub discretization: Discretization,
    pub fluid: Fluid,
    pub plate: Plate,
    pub initial: Initial,
    pub solver: Solver,
    pub output: Output,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Applies `section.key = value` overrides on top of a TOML document.
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, toml::Value)]) -> Result<Self> {
        let mut doc: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for (path, value) in overrides {
            set_dotted(&mut doc, path, value.clone())?;
        }
        let config: Self = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn dt(&self) -> f64 {
        self.time.t_final / self.time.windows as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let d = &self.discretization;
        let f = &self.fluid;
        if !(self.domain.length > 0.0) || !self.domain.length.is_finite() {
            return bad(format!("domain.length must be positive (got {})", self.domain.length));
        }
        if self.time.windows == 0 {
            return bad("time.windows must be at least 1".into());
        }
        if !(self.time.t_final > 0.0) || !self.time.t_final.is_finite() {
            return bad(format!(
                "time step must be positive: t_final = {} gives dt = {}",
                self.time.t_final,
                self.dt()
            ));
        }
        if d.k == 0 || d.k > 16 {
            return bad(format!("discretization.k must lie in 1..=16 (got {})", d.k));
        }
        if d.nx < 4 || d.nz < 4 {
            return bad(format!("grid must have at least 4×4 cells (got {}×{})", d.nx, d.nz));
        }
        if d.fsp_substeps == 0 {
            return bad("discretization.fsp_substeps must be at least 1".into());
        }
        if d.quadrature_order < 2 {
            return bad("discretization.quadrature_order must be at least 2".into());
        }
        f.law().validate()?;
        if !(f.mu > 0.0) {
            return bad(format!("fluid.mu must be positive (got {})", f.mu));
        }
        if !(f.lambda + 2.0 / 3.0 * f.mu > 0.0) {
            return bad(format!(
                "fluid.lambda + 2/3 fluid.mu must be positive (got {})",
                f.lambda + 2.0 / 3.0 * f.mu
            ));
        }
        if !(f.epsilon > 0.0) {
            return bad(format!("fluid.epsilon must be positive (got {})", f.epsilon));
        }
        self.plate.nonlinearity()?;
        let init = &self.initial;
        if !(init.density > 0.0) {
            return bad(format!("initial.density must be positive (got {})", init.density));
        }
        if !(init.density_noise >= 0.0) || !(init.density_wave.abs() < init.density) {
            return bad("initial density perturbations must keep the density positive".into());
        }
        for (name, v, max) in [
            ("plate_displacement", &init.plate_displacement, d.k),
            ("plate_velocity", &init.plate_velocity, d.k),
            ("temperature", &init.temperature, d.k),
            ("fluid_velocity", &init.fluid_velocity, 2 * d.k),
        ] {
            if v.len() > max {
                return bad(format!("initial.{name} has {} entries, at most {max} allowed", v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return bad(format!("initial.{name} has non-finite entries"));
            }
        }
        let s = &self.solver;
        if !(s.picard_tol > 0.0) || s.picard_max_iter == 0 {
            return bad("solver.picard_tol must be positive and picard_max_iter at least 1".into());
        }
        if !(s.collision_floor > 0.0 && s.collision_floor < 1.0) {
            return bad(format!("solver.collision_floor must lie in (0, 1) (got {})", s.collision_floor));
        }
        if !(s.identity_tol > 0.0) {
            return bad("solver.identity_tol must be positive".into());
        }
        Ok(())
    }
}

fn set_dotted(doc: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let leaf = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Config(format!("empty parameter path `{path}`")))?;
    let mut table = doc;
    for part in parts {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{part}` in `{path}` is not a table")))?;
    }
    table.insert(leaf.to_string(), value);
    Ok(())
}

/// Names of every settable leaf parameter, as dotted paths.
pub fn parameter_paths() -> Vec<String> {
    let value = toml::Value::try_from(RunConfig::default()).expect("defaults serialize");
    let mut out = Vec::new();
    if let toml::Value::Table(t) = value {
        for (section, inner) in t {
            if let toml::Value::Table(inner) = inner {
                for key in inner.keys() {
                    out.push(format!("{section}.{key}"));
                }
            }
        }
    }
    out.sort();
    out
}
