//! Cell-centred finite-volume grid on the reference rectangle and the
//! per-time geometry and velocity data sampled on it.

use serde::Serialize;

use crate::bases::{FluidBasis, PlateBasis, VectorSample};
use crate::error::{Error, Result};

/// nx × nz cells on (0, L) × (-1, 0); cell (i, j) is stored at j*nx + i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellGrid {
    pub nx: usize,
    pub nz: usize,
    pub length: f64,
}

impl CellGrid {
    pub fn new(nx: usize, nz: usize, length: f64) -> Result<Self> {
        if nx < 2 || nz < 2 || !(length > 0.0) {
            return Err(Error::Config(format!(
                "grid needs at least 2×2 cells and L > 0 (got {nx}×{nz}, L={length})"
            )));
        }
        Ok(Self { nx, nz, length })
    }
    pub fn hx(&self) -> f64 {
        self.length / self.nx as f64
    }
    pub fn hz(&self) -> f64 {
        1.0 / self.nz as f64
    }
    pub fn area(&self) -> f64 {
        self.hx() * self.hz()
    }
    pub fn cells(&self) -> usize {
        self.nx * self.nz
    }
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    pub fn xc(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hx()
    }
    pub fn zc(&self, j: usize) -> f64 {
        -1.0 + (j as f64 + 0.5) * self.hz()
    }
    pub fn xf(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }
    pub fn zf(&self, j: usize) -> f64 {
        -1.0 + j as f64 * self.hz()
    }

    pub fn centers(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.cells());
        for j in 0..self.nz {
            for i in 0..self.nx {
                out.push((self.xc(i), self.zc(j)));
            }
        }
        out
    }

    /// Vertical faces (nx+1 per row), row-major: j*(nx+1) + i.
    pub fn x_faces(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity((self.nx + 1) * self.nz);
        for j in 0..self.nz {
            for i in 0..=self.nx {
                out.push((self.xf(i), self.zc(j)));
            }
        }
        out
    }

    /// Horizontal faces (nz+1 per column), row-major: j*nx + i.
    pub fn z_faces(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.nx * (self.nz + 1));
        for j in 0..=self.nz {
            for i in 0..self.nx {
                out.push((self.xc(i), self.zf(j)));
            }
        }
        out
    }

    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.centers().into_iter().map(|(x, z)| f(x, z)).collect()
    }

    /// ∫ J r over the reference cells.
    pub fn weighted_mass(&self, r: &[f64], jacobian_columns: &[f64]) -> f64 {
        let area = self.area();
        r.iter()
            .enumerate()
            .map(|(c, r)| area * jacobian_columns[c % self.nx] * r)
            .sum()
    }
}

/// Plate modes sampled on the cell-centre and face abscissae.
#[derive(Debug, Clone)]
pub struct PlateColumns {
    /// `[mode][i]` value at cell-centre columns.
    pub center_value: Vec<Vec<f64>>,
    pub center_slope: Vec<Vec<f64>>,
    /// `[mode][i]` value at vertical-face abscissae.
    pub face_value: Vec<Vec<f64>>,
}

impl PlateColumns {
    pub fn new(plate: &PlateBasis, grid: &CellGrid) -> Self {
        let k = plate.k();
        let mut center_value = vec![vec![0.0; grid.nx]; k];
        let mut center_slope = vec![vec![0.0; grid.nx]; k];
        let mut face_value = vec![vec![0.0; grid.nx + 1]; k];
        for m in 0..k {
            for i in 0..grid.nx {
                let d = plate.derivatives(m, grid.xc(i));
                center_value[m][i] = d[0];
                center_slope[m][i] = d[1];
            }
            for i in 1..grid.nx {
                face_value[m][i] = plate.value(m, grid.xf(i));
            }
        }
        Self {
            center_value,
            center_slope,
            face_value,
        }
    }

    fn combine(rows: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rows[0].len()];
        for (c, row) in coeffs.iter().zip(rows) {
            if *c == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(row) {
                *o += c * v;
            }
        }
        out
    }

    pub fn level(&self, t: f64, beta: &[f64], gamma: &[f64]) -> GeometryLevel {
        let w_center = Self::combine(&self.center_value, beta);
        let jacobian_center = w_center.iter().map(|w| 1.0 + w).collect();
        let w_face = Self::combine(&self.face_value, beta);
        GeometryLevel {
            t,
            jacobian_center,
            slope_center: Self::combine(&self.center_slope, beta),
            velocity_center: Self::combine(&self.center_value, gamma),
            jacobian_face: w_face.iter().map(|w| 1.0 + w).collect(),
            w_center,
            plate_velocity: gamma.to_vec(),
        }
    }
}

/// Displacement-derived coefficients at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryLevel {
    pub t: f64,
    pub w_center: Vec<f64>,
    pub jacobian_center: Vec<f64>,
    pub slope_center: Vec<f64>,
    /// ∂t w at cell-centre columns.
    pub velocity_center: Vec<f64>,
    pub jacobian_face: Vec<f64>,
    /// Modal plate velocity (β̇).
    pub plate_velocity: Vec<f64>,
}

impl GeometryLevel {
    pub fn min_jacobian(&self) -> f64 {
        self.jacobian_center
            .iter()
            .chain(&self.jacobian_face)
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

/// Fluid basis sampled at cell centres and faces.
#[derive(Debug, Clone)]
pub struct BasisTables {
    pub dim: usize,
    pub centers: Vec<VectorSample>,
    /// x component only, per vertical face.
    pub x_faces: Vec<f64>,
    /// (x, z) components per horizontal face.
    pub z_faces: Vec<[f64; 2]>,
}

impl BasisTables {
    pub fn new(basis: &FluidBasis, grid: &CellGrid) -> Self {
        let dim = basis.dim();
        let centers = basis.tabulate(&grid.centers());
        let x_faces = basis
            .tabulate_values(&grid.x_faces())
            .iter()
            .map(|v| v[0])
            .collect();
        let z_faces = basis.tabulate_values(&grid.z_faces());
        Self {
            dim,
            centers,
            x_faces,
            z_faces,
        }
    }

    pub fn cell(&self, c: usize) -> &[VectorSample] {
        &self.centers[c * self.dim..(c + 1) * self.dim]
    }

    /// Face velocities of U = Σ α_i g_i.
    pub fn face_velocity(&self, alpha: &[f64]) -> FaceVelocity {
        let dim = self.dim;
        let x_faces = self
            .x_faces
            .chunks(dim)
            .map(|row| row.iter().zip(alpha).map(|(g, a)| g * a).sum())
            .collect();
        let z_faces = self
            .z_faces
            .chunks(dim)
            .map(|row| {
                row.iter().zip(alpha).fold([0.0, 0.0], |acc, (g, a)| {
                    [acc[0] + a * g[0], acc[1] + a * g[1]]
                })
            })
            .collect();
        FaceVelocity { x_faces, z_faces }
    }

    /// U and its reference gradient at cell centres.
    pub fn cell_velocity(&self, alpha: &[f64]) -> Vec<VectorSample> {
        self.centers
            .chunks(self.dim)
            .map(|row| {
                let mut out = VectorSample::default();
                for (g, a) in row.iter().zip(alpha) {
                    if *a == 0.0 {
                        continue;
                    }
                    for c in 0..2 {
                        out.value[c] += a * g.value[c];
                        for d in 0..2 {
                            out.grad[c][d] += a * g.grad[c][d];
                        }
                    }
                }
                out
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceVelocity {
    /// U₁ at vertical faces.
    pub x_faces: Vec<f64>,
    /// (U₁, U₂) at horizontal faces.
    pub z_faces: Vec<[f64; 2]>,
}
