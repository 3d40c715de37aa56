//! Clamped–clamped beam eigenfunctions on (0, L).

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::LineRule;

/// Smallest positive roots of cos(x)cosh(x) = 1, written as cos(x) - sech(x) = 0.
///
/// Root `i` (zero-based) lies in ((i+1)π, (i+2)π). Safeguarded Newton with a
/// bisection fallback.
pub fn clamped_beam_root(i: usize) -> Result<f64> {
    let f = |x: f64| x.cos() - 1.0 / x.cosh();
    let df = |x: f64| -x.sin() + x.tanh() / x.cosh();
    let (mut lo, mut hi) = ((i + 1) as f64 * PI, (i + 2) as f64 * PI);
    let (flo, fhi) = (f(lo), f(hi));
    if flo * fhi > 0.0 {
        return Err(Error::RootBracket { lo, hi });
    }
    let rising = flo < 0.0;
    // Asymptotic root as the starting guess.
    let mut x = (i as f64 + 1.5) * PI;
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == rising {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / df(x);
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct PlateMode {
    /// Frequency parameter (1/length).
    pub mu: f64,
    /// Eigenvalue mu^4.
    pub xi: f64,
    pub sigma: f64,
    /// Coefficient of exp(mu (x - L)) in the stable form.
    growth: f64,
    decay: f64,
    scale: f64,
}

/// L²-orthonormal eigenfunctions of the clamped biharmonic problem.
#[derive(Debug, Clone, Serialize)]
pub struct PlateBasis {
    pub length: f64,
    pub modes: Vec<PlateMode>,
}

impl PlateBasis {
    pub fn new(k: usize, length: f64) -> Result<Self> {
        if k == 0 || length.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::Config(format!(
                "plate basis needs k >= 1 and L > 0 (k={k}, L={length})"
            )));
        }
        let modes = (0..k)
            .map(|i| {
                let root = clamped_beam_root(i)?;
                let mu = root / length;
                let em = (-root).exp();
                let growth =
                    (root.cos() - root.sin() - em) / (1.0 - em * em - 2.0 * root.sin() * em);
                let sigma = 1.0 - 2.0 * growth * em;
                Ok(PlateMode {
                    mu,
                    xi: mu.powi(4),
                    sigma,
                    growth,
                    decay: 0.5 * (1.0 + sigma),
                    scale: 1.0 / length.sqrt(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let basis = Self { length, modes };
        basis.check_orthonormal(&LineRule::for_plate(length, k), 1e-10)?;
        Ok(basis)
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.xi).collect()
    }

    /// Derivatives of order 0..=4 of mode `i` at `x`.
    pub fn derivatives(&self, i: usize, x: f64) -> [f64; 5] {
        let m = &self.modes[i];
        let mu = m.mu;
        let up = m.growth * (mu * (x - self.length)).exp();
        let down = m.decay * (-mu * x).exp();
        let (s, c) = (mu * x).sin_cos();
        // d^n/dx^n of -cos and sin cycle with period four.
        let trig = [
            -c + m.sigma * s,
            s + m.sigma * c,
            c - m.sigma * s,
            -s - m.sigma * c,
            -c + m.sigma * s,
        ];
        let mut out = [0.0; 5];
        let mut pow = 1.0;
        for (n, slot) in out.iter_mut().enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            *slot = m.scale * pow * (up + sign * down + trig[n]);
            pow *= mu;
        }
        out
    }

    pub fn value(&self, i: usize, x: f64) -> f64 {
        self.derivatives(i, x)[0]
    }

    /// w(x) and its derivatives for modal coefficients `beta`.
    pub fn synthesize(&self, beta: &[f64], x: f64) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (i, b) in beta.iter().enumerate() {
            if *b == 0.0 {
                continue;
            }
            let d = self.derivatives(i, x);
            for n in 0..5 {
                out[n] += b * d[n];
            }
        }
        out
    }

    pub fn tabulate(&self, rule: &LineRule) -> PlateTable {
        let k = self.k();
        let mut values: [Vec<Vec<f64>>; 4] = Default::default();
        for d in values.iter_mut() {
            *d = vec![vec![0.0; rule.len()]; k];
        }
        for (q, &x) in rule.points.iter().enumerate() {
            for i in 0..k {
                let d = self.derivatives(i, x);
                for n in 0..4 {
                    values[n][i][q] = d[n];
                }
            }
        }
        PlateTable {
            weights: rule.weights.clone(),
            points: rule.points.clone(),
            values,
        }
    }

    pub fn project(&self, rule: &LineRule, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.k())
            .map(|i| rule.integrate(|x| f(x) * self.value(i, x)))
            .collect()
    }

    fn check_orthonormal(&self, rule: &LineRule, tol: f64) -> Result<()> {
        let table = self.tabulate(rule);
        for i in 0..self.k() {
            for j in 0..=i {
                let g = table.inner(0, i, 0, j);
                let target = if i == j { 1.0 } else { 0.0 };
                if (g - target).abs() > tol {
                    return Err(Error::NonOrthonormal {
                        row: i,
                        col: j,
                        deviation: g - target,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Plate basis derivatives 0..=3 on the nodes of a line rule.
#[derive(Debug, Clone)]
pub struct PlateTable {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// `values[order][mode][node]`.
    pub values: [Vec<Vec<f64>>; 4],
}

impl PlateTable {
    pub fn k(&self) -> usize {
        self.values[0].len()
    }

    /// ∫ s_i^(a) s_j^(b).
    pub fn inner(&self, a: usize, i: usize, b: usize, j: usize) -> f64 {
        let (u, v) = (&self.values[a][i], &self.values[b][j]);
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    }

    /// Derivative of order `d` of w = Σ β_i s_i at every node.
    pub fn field(&self, d: usize, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.points.len()];
        for (b, row) in beta.iter().zip(&self.values[d]) {
            if *b == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(row) {
                *o += b * v;
            }
        }
        out
    }
}
