//! Five-point operators on the cell grid and a preconditioned BiCGStab.

use crate::error::{Error, Result};

/// Row coefficients of a five-point operator: y_P = Σ c r over P and its
/// west/east/south/north neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct FivePoint {
    pub nx: usize,
    pub diag: Vec<f64>,
    pub west: Vec<f64>,
    pub east: Vec<f64>,
    pub south: Vec<f64>,
    pub north: Vec<f64>,
}

impl FivePoint {
    pub fn zeros(nx: usize, cells: usize) -> Self {
        Self {
            nx,
            diag: vec![0.0; cells],
            west: vec![0.0; cells],
            east: vec![0.0; cells],
            south: vec![0.0; cells],
            north: vec![0.0; cells],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, r: &[f64], out: &mut [f64]) {
        let n = self.len();
        let nx = self.nx;
        for p in 0..n {
            let mut y = self.diag[p] * r[p];
            if self.west[p] != 0.0 {
                y += self.west[p] * r[p - 1];
            }
            if self.east[p] != 0.0 {
                y += self.east[p] * r[p + 1];
            }
            if self.south[p] != 0.0 {
                y += self.south[p] * r[p - nx];
            }
            if self.north[p] != 0.0 {
                y += self.north[p] * r[p + nx];
            }
            out[p] = y;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `op x = b` from the initial guess `x`; returns the iteration count.
pub fn bicgstab(op: &FivePoint, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<usize> {
    let n = b.len();
    let inv_diag: Vec<f64> = op
        .diag
        .iter()
        .map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    for iter in 0..max_iter {
        let res = norm(&r);
        if res <= rel_tol * bnorm {
            return Ok(iter);
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = inv_diag[i] * p[i];
        }
        op.apply(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            break;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= rel_tol * bnorm {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            return Ok(iter + 1);
        }
        for i in 0..n {
            z[i] = inv_diag[i] * s[i];
        }
        op.apply(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if omega == 0.0 {
            break;
        }
    }
    // Accept a stagnated iterate only if it is still an accurate solution.
    let mut check = vec![0.0; n];
    op.apply(x, &mut check);
    let res = check.iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    if res <= 1e3 * rel_tol * bnorm {
        Ok(max_iter)
    } else {
        Err(Error::LinearSolve(format!(
            "BiCGStab stalled with relative residual {:.3e}",
            res / bnorm
        )))
    }
}
