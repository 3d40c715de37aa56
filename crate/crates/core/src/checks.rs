//! Fast invariant checks behind `fsisplit check`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bases::{clamped_beam_root, harmonic_extension_grid, sine_extension, FluidBasis, PlateBasis};
use crate::config::RunConfig;
use crate::driver::{handoff_validate, run, ContinuationPolicy, Handoff};
use crate::error::{Error, Result};
use crate::fsp::momentum::assemble_mass_matrix;
use crate::fsp::{BasisTables, CellGrid, FluidState};
use crate::quadrature::LineRule;
use crate::ssp::{Nonlinearity, PlateState};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<(bool, String)>;

pub const CHECKS: [(&str, Check); 8] = [
    ("clamped_root", clamped_root),
    ("plate_spectral_residual", plate_spectral_residual),
    ("lifting_oracle", lifting_oracle),
    ("potential_consistency", potential_consistency),
    ("mass_matrix_spd", mass_matrix_spd),
    ("continuation_recurrence", continuation_recurrence),
    ("handoff_detector", handoff_detector),
    ("demo_run", demo_run),
];

/// Runs every check whose name contains `filter`.
pub fn run_checks(filter: Option<&str>) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .filter(|(name, _)| filter.is_none_or(|f| name.contains(f)))
        .map(|(name, check)| match check() {
            Ok((passed, detail)) => CheckOutcome { name, passed, detail },
            Err(e) => CheckOutcome {
                name,
                passed: false,
                detail: e.to_string(),
            },
        })
        .collect()
}

fn clamped_root() -> Result<(bool, String)> {
    let f = |x: f64| x.cos() * x.cosh() - 1.0;
    let (mut lo, mut hi) = (3.0, 6.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let err = (clamped_beam_root(0)? - 0.5 * (lo + hi)).abs();
    Ok((err <= 1e-9, format!("|μ₁ - bisection| = {err:.2e}")))
}

fn plate_spectral_residual() -> Result<(bool, String)> {
    let plate = PlateBasis::new(8, 1.0)?;
    let rule = LineRule::for_plate(1.0, 8);
    let mut worst: f64 = 0.0;
    for (i, mode) in plate.modes.iter().enumerate() {
        for &x in &rule.points {
            let d = plate.derivatives(i, x);
            worst = worst.max((d[4] - mode.xi * d[0]).abs() / mode.xi);
        }
    }
    Ok((worst <= 1e-8, format!("max relative residual {worst:.2e}")))
}

fn lifting_oracle() -> Result<(bool, String)> {
    let pi = std::f64::consts::PI;
    let lift = harmonic_extension_grid(|x| (pi * x).sin(), 1.0, 128, 64)?;
    let mut worst: f64 = 0.0;
    for j in 0..=64 {
        for i in 0..=128 {
            worst = worst.max((lift.at(i, j) - sine_extension(1, 1.0, lift.x(i), lift.z(j))).abs());
        }
    }
    Ok((worst <= 1e-6, format!("max error {worst:.2e}")))
}

fn potential_consistency() -> Result<(bool, String)> {
    let plate = PlateBasis::new(4, 1.0)?;
    let table = plate.tabulate(&LineRule::for_plate(1.0, 4));
    let nl = Nonlinearity::CubicQuasilinear;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let beta: Vec<f64> = (0..4).map(|i| rng.random_range(-1.0..1.0) / ((i + 1) * (i + 1)) as f64).collect();
        let force = nl.force(&beta, &table);
        let scale = force.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for j in 0..4 {
            let mut up = beta.clone();
            let mut down = beta.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (nl.potential(&up, &table) - nl.potential(&down, &table)) / (2.0 * h);
            worst = worst.max((fd - force[j]).abs() / scale);
        }
    }
    Ok((worst <= 1e-6, format!("max relative error {worst:.2e}")))
}

fn mass_matrix_spd() -> Result<(bool, String)> {
    let plate = PlateBasis::new(4, 1.0)?;
    let grid = CellGrid::new(16, 8, 1.0)?;
    let tables = BasisTables::new(&FluidBasis::new(&plate), &grid);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let r: Vec<f64> = (0..grid.cells()).map(|_| rng.random_range(0.1..10.0)).collect();
        let jac: Vec<f64> = (0..grid.nx).map(|_| rng.random_range(0.1..2.0)).collect();
        assemble_mass_matrix(&grid, &tables, &r, &jac)?;
    }
    let mut r = vec![1.0; grid.cells()];
    r[5] = 0.0;
    let rejected = matches!(
        assemble_mass_matrix(&grid, &tables, &r, &vec![1.0; grid.nx]),
        Err(Error::MassMatrixNotSpd { .. })
    );
    Ok((rejected, "50 positive samples factorized; zero density rejected".into()))
}

fn continuation_recurrence() -> Result<(bool, String)> {
    let policy = ContinuationPolicy {
        energy_constant: 1.0,
        floor: 1e-3,
        max_extensions: 1000,
        horizon_cap: 50.0,
    };
    let slope = 0.5;
    let trace = policy.run(&|_t0: f64, t1: f64| 1.0 - slope * t1);
    let (mut t, mut c) = (0.0f64, 1.0f64);
    let mut ok = trace.horizons[0] == 0.0 && trace.minima[0] == c;
    for (h, m) in trace.horizons.iter().zip(&trace.minima).skip(1) {
        t += (c / 2.0).powi(4);
        c = c.min(1.0 - slope * t);
        ok &= *h == t && *m == c;
    }
    Ok((ok, format!("{} extensions, horizon {:.4}", trace.horizons.len() - 1, trace.horizon())))
}

fn handoff_detector() -> Result<(bool, String)> {
    let state = Handoff {
        plate: PlateState::zeros(3, 0.0),
        fluid: FluidState {
            r: vec![1.0; 4],
            alpha: vec![0.0; 6],
            t: 0.0,
        },
    };
    let same = handoff_validate(&state, &state.clone()).is_ok();
    let mut bad = state.clone();
    bad.fluid.alpha[4] += 1e-9;
    let caught = matches!(
        handoff_validate(&state, &bad),
        Err(Error::HandoffMismatch { index: 4, .. })
    );
    Ok((same && caught, "copy accepted, 1e-9 perturbation located".into()))
}

fn demo_run() -> Result<(bool, String)> {
    let mut config = RunConfig::default();
    config.time.t_final = 0.05;
    config.time.windows = 5;
    let out = run(&config)?;
    let failed: Vec<&str> = out.verdicts.iter().filter(|v| !v.passed).map(|v| v.name).collect();
    Ok((
        failed.is_empty(),
        if failed.is_empty() {
            format!("{} verdicts passed", out.verdicts.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    ))
}
