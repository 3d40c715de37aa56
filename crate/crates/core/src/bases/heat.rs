//! Dirichlet Laplacian eigenfunctions on (0, L).

use std::f64::consts::PI;

use serde::Serialize;

use crate::quadrature::LineRule;

#[derive(Debug, Clone, Serialize)]
pub struct HeatBasis {
    pub length: f64,
    pub xi: Vec<f64>,
}

impl HeatBasis {
    pub fn new(k: usize, length: f64) -> Self {
        let xi = (1..=k).map(|i| (i as f64 * PI / length).powi(2)).collect();
        Self { length, xi }
    }

    pub fn k(&self) -> usize {
        self.xi.len()
    }

    fn frequency(&self, i: usize) -> f64 {
        (i + 1) as f64 * PI / self.length
    }

    pub fn value(&self, i: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (self.frequency(i) * x).sin()
    }

    pub fn derivative(&self, i: usize, x: f64) -> f64 {
        let nu = self.frequency(i);
        (2.0 / self.length).sqrt() * nu * (nu * x).cos()
    }

    pub fn project(&self, rule: &LineRule, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.k())
            .map(|i| rule.integrate(|x| f(x) * self.value(i, x)))
            .collect()
    }
}
