//! Horizon extension policy: each extension has length (c/(2C))⁴ where c is
//! the smallest Jacobian seen so far and C the energy-dependent Hölder
//! constant of J in time.

use serde::Serialize;

/// A scalar history of min_X J(t, X).
pub trait MinJacobianHistory {
    /// min J over [t0, t1].
    fn min_on(&self, t0: f64, t1: f64) -> f64;

    /// Last time the history is known.
    fn end(&self) -> f64 {
        f64::INFINITY
    }
}

impl<F: Fn(f64, f64) -> f64> MinJacobianHistory for F {
    fn min_on(&self, t0: f64, t1: f64) -> f64 {
        self(t0, t1)
    }
}

/// Piecewise-linear history through sampled (t, min J) pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledHistory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledHistory {
    fn at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let f = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        (1.0 - f) * self.values[i] + f * self.values[i + 1]
    }
}

impl MinJacobianHistory for SampledHistory {
    fn min_on(&self, t0: f64, t1: f64) -> f64 {
        let inner = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t > t0 && **t < t1)
            .fold(f64::INFINITY, |m, (_, v)| m.min(*v));
        inner.min(self.at(t0)).min(self.at(t1))
    }

    fn end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuationEnd {
    /// The running minimum fell to the collision floor.
    Collision,
    /// The horizon reached the cap.
    Cap,
    MaxExtensions,
    /// The next extension would leave the known history.
    HistoryExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuationPolicy {
    /// C(E0).
    pub energy_constant: f64,
    pub floor: f64,
    pub max_extensions: usize,
    pub horizon_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationTrace {
    /// T_0 = 0, T_1, ...
    pub horizons: Vec<f64>,
    /// c_0, c_1, ... with c_n = min J over [0, T_n].
    pub minima: Vec<f64>,
    pub end: ContinuationEnd,
}

impl ContinuationTrace {
    pub fn horizon(&self) -> f64 {
        *self.horizons.last().expect("at least T_0")
    }
}

impl ContinuationPolicy {
    /// T_n - T_{n-1} for the running minimum `c`.
    pub fn extension(&self, c: f64) -> f64 {
        (c / (2.0 * self.energy_constant)).powi(4)
    }

    pub fn run(&self, history: &impl MinJacobianHistory) -> ContinuationTrace {
        let mut horizons = vec![0.0];
        let mut c = history.min_on(0.0, 0.0);
        let mut minima = vec![c];
        let end = loop {
            if c <= self.floor {
                break ContinuationEnd::Collision;
            }
            let t = *horizons.last().expect("nonempty");
            if t >= self.horizon_cap {
                break ContinuationEnd::Cap;
            }
            if horizons.len() > self.max_extensions {
                break ContinuationEnd::MaxExtensions;
            }
            let next = t + self.extension(c);
            if next > history.end() {
                break ContinuationEnd::HistoryExhausted;
            }
            c = c.min(history.min_on(t, next));
            horizons.push(next);
            minima.push(c);
        };
        ContinuationTrace { horizons, minima, end }
    }
}
