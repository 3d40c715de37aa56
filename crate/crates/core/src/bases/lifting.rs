//! Harmonic extension of plate traces into the reference rectangle.
//!
//! Two realizations: a separable sine series with closed-form coefficients
//! (used by the solver) and a grid solver (DST in x, Numerov in z) used to
//! cross-check it.

use std::f64::consts::PI;

use crate::bases::plate::PlateBasis;
use crate::error::{Error, Result};

/// Harmonic function on (0,L)×(-1,0) equal to sin(mπx/L) on top, zero elsewhere.
pub fn sine_extension(mode: usize, length: f64, x: f64, z: f64) -> f64 {
    let nu = mode as f64 * PI / length;
    (nu * x).sin() * sinh_ratio(nu, z)
}

/// sinh(ν(z+1)) / sinh(ν) without overflow.
fn sinh_ratio(nu: f64, z: f64) -> f64 {
    (nu * z).exp() * (1.0 - (-2.0 * nu * (z + 1.0)).exp()) / (1.0 - (-2.0 * nu).exp())
}

/// Sine-series extension of every plate mode.
///
/// The sine coefficients of a clamped mode follow from four integrations by
/// parts: c_m = (2/L) ν (s''(L)(-1)^m - s''(0)) / (ν⁴ - μ⁴).
#[derive(Debug, Clone)]
pub struct SeriesLifting {
    length: f64,
    /// (s''(0), s''(L), μ⁴) per mode.
    modes: Vec<(f64, f64, f64)>,
    plate: PlateBasis,
}

/// Value and reference gradient of one scalar lifting at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LiftSample {
    pub value: f64,
    pub dx: f64,
    pub dz: f64,
}

const TAIL_EXPONENT: f64 = 42.0;
const MAX_TERMS: usize = 400_000;

impl SeriesLifting {
    pub fn new(plate: &PlateBasis) -> Self {
        let modes = (0..plate.k())
            .map(|i| {
                (
                    plate.derivatives(i, 0.0)[2],
                    plate.derivatives(i, plate.length)[2],
                    plate.modes[i].xi,
                )
            })
            .collect();
        Self {
            length: plate.length,
            modes,
            plate: plate.clone(),
        }
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    /// Sine coefficient m (one-based) of mode i.
    pub fn coefficient(&self, i: usize, m: usize) -> f64 {
        let (b0, bl, mu4) = self.modes[i];
        let nu = m as f64 * PI / self.length;
        let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        2.0 / self.length * nu * (bl * sign - b0) / (nu.powi(4) - mu4)
    }

    /// Number of series terms needed at depth -z for full double precision.
    pub fn terms_at(&self, z: f64) -> usize {
        let depth = -z;
        if depth <= 0.0 {
            return MAX_TERMS;
        }
        ((TAIL_EXPONENT * self.length / (PI * depth)).ceil() as usize).clamp(8, MAX_TERMS)
    }

    /// All k liftings at (x, z); `out` has length k.
    pub fn eval_all(&self, x: f64, z: f64, out: &mut [LiftSample]) {
        assert_eq!(out.len(), self.k());
        if z >= 0.0 {
            // On the top edge the lifting equals its trace.
            for (i, o) in out.iter_mut().enumerate() {
                let d = self.plate.derivatives(i, x);
                *o = LiftSample {
                    value: d[0],
                    dx: d[1],
                    dz: self.normal_derivative(i, x),
                };
            }
            return;
        }
        for o in out.iter_mut() {
            *o = LiftSample::default();
        }
        if z <= -1.0 {
            for (i, o) in out.iter_mut().enumerate() {
                o.dz = self.bottom_derivative(i, x);
            }
            return;
        }
        let terms = self.terms_at(z);
        let theta = PI * x / self.length;
        let (s1, c1) = theta.sin_cos();
        let q = (PI * z / self.length).exp();
        let r = (-2.0 * PI * (z + 1.0) / self.length).exp();
        let s = (-2.0 * PI / self.length).exp();
        let (mut sin_prev, mut sin_cur) = (0.0, s1);
        let (mut cos_prev, mut cos_cur) = (1.0, c1);
        let (mut qm, mut rm, mut sm) = (q, r, s);
        for m in 1..=terms {
            let nu = m as f64 * PI / self.length;
            let denom = 1.0 / (1.0 - sm);
            let e = qm * (1.0 - rm) * denom;
            let de = nu * qm * (1.0 + rm) * denom;
            for (i, o) in out.iter_mut().enumerate() {
                let c = self.coefficient(i, m);
                o.value += c * sin_cur * e;
                o.dx += c * nu * cos_cur * e;
                o.dz += c * sin_cur * de;
            }
            let sin_next = 2.0 * c1 * sin_cur - sin_prev;
            let cos_next = 2.0 * c1 * cos_cur - cos_prev;
            sin_prev = sin_cur;
            sin_cur = sin_next;
            cos_prev = cos_cur;
            cos_cur = cos_next;
            qm *= q;
            rm *= r;
            sm *= s;
            if qm == 0.0 {
                break;
            }
        }
    }

    /// Values only; cheaper than [`SeriesLifting::eval_all`] on the top edge.
    pub fn eval_values(&self, x: f64, z: f64, out: &mut [f64]) {
        if z >= 0.0 {
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.plate.value(i, x);
            }
            return;
        }
        let mut full = vec![LiftSample::default(); self.k()];
        self.eval_all(x, z, &mut full);
        for (o, f) in out.iter_mut().zip(&full) {
            *o = f.value;
        }
    }

    pub fn eval(&self, i: usize, x: f64, z: f64) -> LiftSample {
        let mut out = vec![LiftSample::default(); self.k()];
        self.eval_all(x, z, &mut out);
        out[i]
    }

    fn normal_derivative(&self, i: usize, x: f64) -> f64 {
        let theta = PI * x / self.length;
        (1..=MAX_TERMS / 8)
            .map(|m| {
                let nu = m as f64 * PI / self.length;
                let coth = (1.0 + (-2.0 * nu).exp()) / (1.0 - (-2.0 * nu).exp());
                self.coefficient(i, m) * (m as f64 * theta).sin() * nu * coth
            })
            .sum()
    }

    fn bottom_derivative(&self, i: usize, x: f64) -> f64 {
        let theta = PI * x / self.length;
        (1..=2000)
            .map(|m| {
                let nu = m as f64 * PI / self.length;
                let csch = 2.0 * (-nu).exp() / (1.0 - (-2.0 * nu).exp());
                self.coefficient(i, m) * (m as f64 * theta).sin() * nu * csch
            })
            .sum()
    }
}

/// Node values of a harmonic extension on a uniform (nx+1)×(nz+1) grid.
///
/// `values[j*(nx+1) + i]` at x = i L/nx, z = -1 + j/nz.
#[derive(Debug, Clone)]
pub struct GridLifting {
    pub nx: usize,
    pub nz: usize,
    pub length: f64,
    pub values: Vec<f64>,
}

impl GridLifting {
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.length / self.nx as f64
    }

    pub fn z(&self, j: usize) -> f64 {
        -1.0 + j as f64 / self.nz as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * (self.nx + 1) + i]
    }
}

/// Solves Δu = 0 with u = trace on top and u = 0 on the other edges.
///
/// Fourth-order sine symbol in x, Numerov in z, one tridiagonal solve per
/// sine mode.
pub fn harmonic_extension_grid(
    trace: impl Fn(f64) -> f64,
    length: f64,
    nx: usize,
    nz: usize,
) -> Result<GridLifting> {
    if nx < 2 || nz < 2 {
        return Err(Error::Config(format!("lifting grid too small: {nx}×{nz}")));
    }
    let hx = length / nx as f64;
    let hz = 1.0 / nz as f64;
    let interior: Vec<f64> = (1..nx).map(|i| trace(i as f64 * hx)).collect();
    let coeffs = dst1(&interior);
    let mut modal = vec![vec![0.0; nz + 1]; nx - 1];
    for (m, column) in modal.iter_mut().enumerate() {
        let g = coeffs[m];
        if g == 0.0 {
            continue;
        }
        let theta = (m + 1) as f64 * PI / nx as f64;
        let lambda = (2.5 - 8.0 / 3.0 * theta.cos() + (2.0 * theta).cos() / 6.0) / (hx * hx);
        let off = 1.0 / (hz * hz) - lambda / 12.0;
        let diag = -2.0 / (hz * hz) - 10.0 * lambda / 12.0;
        // Unknowns j = 1..nz-1; u_0 = 0, u_nz = g.
        let n = nz - 1;
        let mut rhs = vec![0.0; n];
        rhs[n - 1] = -off * g;
        let sol = solve_tridiagonal(&vec![off; n], &vec![diag; n], &vec![off; n], &rhs)?;
        column[1..nz].copy_from_slice(&sol);
        column[nz] = g;
    }
    let mut values = vec![0.0; (nx + 1) * (nz + 1)];
    for j in 0..=nz {
        let row: Vec<f64> = modal.iter().map(|c| c[j]).collect();
        let phys = idst1(&row);
        for i in 1..nx {
            values[j * (nx + 1) + i] = phys[i - 1];
        }
    }
    for i in 0..=nx {
        values[nz * (nx + 1) + i] = trace(i as f64 * hx);
    }
    Ok(GridLifting {
        nx,
        nz,
        length,
        values,
    })
}

/// Type-I sine transform of interior samples: c_m = (2/n) Σ f_i sin(π m i / n).
fn dst1(f: &[f64]) -> Vec<f64> {
    let n = f.len() + 1;
    (1..n)
        .map(|m| {
            2.0 / n as f64
                * f.iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * (m * (i + 1)) as f64 / n as f64).sin())
                    .sum::<f64>()
        })
        .collect()
}

fn idst1(c: &[f64]) -> Vec<f64> {
    let n = c.len() + 1;
    (1..n)
        .map(|i| {
            c.iter()
                .enumerate()
                .map(|(m, v)| v * (PI * ((m + 1) * i) as f64 / n as f64).sin())
                .sum()
        })
        .collect()
}

/// Thomas algorithm; `lower[0]` and `upper[n-1]` are ignored.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 {
        return Err(Error::LinearSolve("zero pivot in tridiagonal solve".into()));
    }
    c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i] * c[i - 1];
        if pivot == 0.0 {
            return Err(Error::LinearSolve("zero pivot in tridiagonal solve".into()));
        }
        c[i] = upper[i] / pivot;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
