//! Fluid velocity basis: rectangle Dirichlet eigenfunctions plus plate liftings.

use std::f64::consts::PI;

use serde::Serialize;

use crate::bases::lifting::{LiftSample, SeriesLifting};
use crate::bases::plate::PlateBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Component {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteriorMode {
    pub m: usize,
    pub n: usize,
    pub component: Component,
    pub xi: f64,
}

/// Value and reference gradient of a vector basis function.
///
/// `grad[c][d]` is the derivative of component `c` along direction `d`
/// (0 = x, 1 = z).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VectorSample {
    pub value: [f64; 2],
    pub grad: [[f64; 2]; 2],
}

impl VectorSample {
    pub fn divergence(&self) -> f64 {
        self.grad[0][0] + self.grad[1][1]
    }
}

/// g_0..g_{k-1}: interior eigenfunctions; g_k..g_{2k-1}: liftings of s_i e_z.
#[derive(Debug, Clone)]
pub struct FluidBasis {
    pub length: f64,
    pub interior: Vec<InteriorMode>,
    pub lifting: SeriesLifting,
}

impl FluidBasis {
    pub fn new(plate: &PlateBasis) -> Self {
        let k = plate.k();
        let length = plate.length;
        let reach = k + 2;
        let mut pairs: Vec<(usize, usize)> = (1..=reach)
            .flat_map(|m| (1..=reach).map(move |n| (m, n)))
            .collect();
        let eig = |m: usize, n: usize| PI * PI * ((m * m) as f64 / (length * length) + (n * n) as f64);
        pairs.sort_by(|a, b| {
            eig(a.0, a.1)
                .total_cmp(&eig(b.0, b.1))
                .then(a.0.cmp(&b.0))
                .then(a.1.cmp(&b.1))
        });
        let interior = pairs
            .into_iter()
            .flat_map(|(m, n)| {
                [Component::X, Component::Z].map(|component| InteriorMode {
                    m,
                    n,
                    component,
                    xi: eig(m, n),
                })
            })
            .take(k)
            .collect();
        Self {
            length,
            interior,
            lifting: SeriesLifting::new(plate),
        }
    }

    pub fn k(&self) -> usize {
        self.interior.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.k()
    }

    pub fn interior_sample(&self, i: usize, x: f64, z: f64) -> VectorSample {
        let mode = &self.interior[i];
        let a = mode.m as f64 * PI / self.length;
        let b = mode.n as f64 * PI;
        let amp = 2.0 / self.length.sqrt();
        let (sx, cx) = (a * x).sin_cos();
        let (sz, cz) = (b * (z + 1.0)).sin_cos();
        let value = amp * sx * sz;
        let gx = amp * a * cx * sz;
        let gz = amp * b * sx * cz;
        let c = match mode.component {
            Component::X => 0,
            Component::Z => 1,
        };
        let mut out = VectorSample::default();
        out.value[c] = value;
        out.grad[c] = [gx, gz];
        out
    }

    /// Every basis function at one point; `out` has length 2k.
    pub fn eval_all(&self, x: f64, z: f64, out: &mut [VectorSample]) {
        let k = self.k();
        for (i, o) in out[..k].iter_mut().enumerate() {
            *o = self.interior_sample(i, x, z);
        }
        let mut lifts = vec![LiftSample::default(); k];
        self.lifting.eval_all(x, z, &mut lifts);
        for (o, l) in out[k..].iter_mut().zip(&lifts) {
            *o = VectorSample {
                value: [0.0, l.value],
                grad: [[0.0, 0.0], [l.dx, l.dz]],
            };
        }
    }

    pub fn sample(&self, i: usize, x: f64, z: f64) -> VectorSample {
        let mut out = vec![VectorSample::default(); self.dim()];
        self.eval_all(x, z, &mut out);
        out[i]
    }

    /// Basis values (no gradients) at a list of points, `table[p * dim + i]`.
    pub fn tabulate_values(&self, points: &[(f64, f64)]) -> Vec<[f64; 2]> {
        use rayon::prelude::*;
        let dim = self.dim();
        let k = self.k();
        let mut table = vec![[0.0; 2]; points.len() * dim];
        table
            .par_chunks_mut(dim)
            .zip(points.par_iter())
            .for_each(|(chunk, &(x, z))| {
                for (i, o) in chunk[..k].iter_mut().enumerate() {
                    *o = self.interior_sample(i, x, z).value;
                }
                let mut lifts = vec![0.0; k];
                self.lifting.eval_values(x, z, &mut lifts);
                for (o, l) in chunk[k..].iter_mut().zip(&lifts) {
                    *o = [0.0, *l];
                }
            });
        table
    }

    /// Basis values at a list of points, `table[p * dim + i]`.
    pub fn tabulate(&self, points: &[(f64, f64)]) -> Vec<VectorSample> {
        use rayon::prelude::*;
        let dim = self.dim();
        let mut table = vec![VectorSample::default(); points.len() * dim];
        table
            .par_chunks_mut(dim)
            .zip(points.par_iter())
            .for_each(|(chunk, &(x, z))| self.eval_all(x, z, chunk));
        table
    }
}
