use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fsisplit::bases::{FluidBasis, PlateBasis};
use fsisplit::fsp::continuity::{theta_step, TransportLevel};
use fsisplit::fsp::momentum::{assemble_mass_matrix, midpoint_forms, min_eigenvalue, momentum_rhs};
use fsisplit::fsp::{
    fsp_fixed_point, CellGrid, FluidState, FspContext, FspParams, GeometryLevel, PressureLaw, TopClosure,
};
use fsisplit::Error;

fn context(k: usize, nx: usize, nz: usize) -> FspContext {
    let plate = PlateBasis::new(k, 1.0).unwrap();
    let fluid = FluidBasis::new(&plate);
    FspContext::new(CellGrid::new(nx, nz, 1.0).unwrap(), &fluid, &plate)
}

fn params(dt: f64, substeps: usize) -> FspParams {
    FspParams {
        eps: 0.05,
        mu: 0.1,
        lambda: 0.0,
        law: PressureLaw { gamma: 1.4, delta: 0.01, a: 9.0 },
        closure: TopClosure::Conservative,
        dt_window: dt,
        substeps,
        picard_tol: 1e-10,
        picard_max_iter: 50,
    }
}

fn flat_levels(ctx: &FspContext, dt: f64, n: usize) -> Vec<GeometryLevel> {
    (0..=2 * n)
        .map(|j| ctx.columns.level(dt * j as f64 / (2 * n) as f64, &vec![0.0; ctx.k], &vec![0.0; ctx.k]))
        .collect()
}

#[test]
fn pressure_law_validation() {
    assert!(PressureLaw { gamma: 1.4, delta: 0.0, a: 9.0 }.validate().is_ok());
    assert!(PressureLaw { gamma: 1.0, delta: 0.0, a: 9.0 }.validate().is_err());
    assert!(PressureLaw { gamma: 1.4, delta: 0.0, a: 8.0 }.validate().is_err());
    assert!(PressureLaw { gamma: 1.4, delta: -0.1, a: 9.0 }.validate().is_err());
    let law = PressureLaw { gamma: 2.0, delta: 0.5, a: 9.0 };
    let r = 1.3;
    let h = 1e-6;
    let d = (law.internal(r + h) - law.internal(r - h)) / (2.0 * h);
    assert!((d - law.enthalpy(r)).abs() < 1e-7);
    assert!((r * law.enthalpy(r) - law.internal(r) - law.pressure(r)).abs() < 1e-12);
}

fn continuity_run(ctx: &FspContext, r0: Vec<f64>, eps: f64, t_end: f64, steps: usize) -> Vec<f64> {
    let level = ctx.columns.level(0.0, &vec![0.0; ctx.k], &vec![0.0; ctx.k]);
    let velocity = ctx.tables.face_velocity(&vec![0.0; 2 * ctx.k]);
    let mesh = vec![0.0; ctx.grid.nx];
    let tl = TransportLevel { geometry: &level, velocity: &velocity, mesh_velocity: &mesh };
    let mut r = r0;
    for _ in 0..steps {
        r = theta_step(&ctx.grid, &r, &tl, &tl, t_end / steps as f64, eps, 0.5, TopClosure::Conservative)
            .unwrap()
            .density;
    }
    r
}

#[test]
fn constant_density_is_steady() {
    let ctx = context(2, 16, 8);
    let r = continuity_run(&ctx, vec![1.7; ctx.grid.cells()], 0.1, 0.5, 20);
    assert!(r.iter().all(|v| (v - 1.7).abs() < 1e-12));
}

#[test]
fn cosine_mode_decays_like_the_heat_kernel() {
    let ctx = context(1, 128, 4);
    let grid = &ctx.grid;
    let eps = 0.05;
    let t_end = 1.0;
    let r0 = grid.sample(|x, _| 1.0 + (PI * x).cos());
    let r = continuity_run(&ctx, r0, eps, t_end, 400);
    let amp = 2.0 * (0..grid.nx).map(|i| (r[grid.index(i, 0)] - 1.0) * (PI * grid.xc(i)).cos()).sum::<f64>()
        / grid.nx as f64;
    let exact = (-eps * PI * PI * t_end).exp();
    assert!((amp - exact).abs() < 1e-4 * exact, "{amp} vs {exact}");
    // Mean preserved by the Neumann walls.
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    assert!((mean - 1.0).abs() < 1e-12);
}

#[test]
fn weighted_mass_examples() {
    let grid = CellGrid::new(8, 4, 2.0).unwrap();
    let r = vec![1.0; grid.cells()];
    assert!((grid.weighted_mass(&r, &vec![1.0; grid.nx]) - 2.0).abs() < 1e-14);
    assert!((grid.weighted_mass(&r, &vec![1.5; grid.nx]) - 3.0).abs() < 1e-14);
}

#[test]
fn mass_matrix_structure() {
    let ctx = context(4, 16, 8);
    let (grid, tables) = (&ctx.grid, &ctx.tables);
    let m = assemble_mass_matrix(grid, tables, &vec![1.0; grid.cells()], &vec![1.0; grid.nx]).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                assert!(m[(i, j)].abs() < 1e-12, "({i},{j}) = {}", m[(i, j)]);
            }
        }
    }
    let base = min_eigenvalue(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let r: Vec<f64> = (0..grid.cells()).map(|_| rng.random_range(0.2..3.0)).collect();
        let jac: Vec<f64> = (0..grid.nx).map(|_| rng.random_range(0.5..1.5)).collect();
        let weighted = assemble_mass_matrix(grid, tables, &r, &jac).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(weighted[(i, j)], weighted[(j, i)]);
            }
        }
        let c_r = r.iter().cloned().fold(f64::INFINITY, f64::min);
        let c_j = jac.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_eigenvalue(&weighted) >= c_r * c_j * base * (1.0 - 1e-10));
    }
    let mut r = vec![1.0; grid.cells()];
    r[0] = -0.5;
    assert!(matches!(
        assemble_mass_matrix(grid, tables, &r, &vec![1.0; grid.nx]),
        Err(Error::MassMatrixNotSpd { .. })
    ));
}

#[test]
fn uniform_pressure_does_no_work_on_interior_modes() {
    let ctx = context(4, 32, 16);
    let level = ctx.columns.level(0.0, &[0.0; 4], &[0.0; 4]);
    let cells = ctx.grid.cells();
    let velocity = ctx.tables.cell_velocity(&[0.0; 8]);
    let forms = midpoint_forms(&ctx.grid, &ctx.tables, &level, &vec![1.0; cells], &vec![2.0; cells], &velocity);
    for i in 0..4 {
        assert!(forms.pressure[i].abs() < 1e-12, "mode {i}: {}", forms.pressure[i]);
    }
    // The liftings carry the boundary flux p ∫ s_i.
    assert!(forms.pressure.rows(4, 4).amax() > 1e-3);
}

#[test]
fn convective_form_is_skew() {
    let ctx = context(4, 16, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let beta: Vec<f64> = (0..4).map(|_| rng.random_range(-0.05..0.05)).collect();
        let gamma: Vec<f64> = (0..4).map(|_| rng.random_range(-0.5..0.5)).collect();
        let level = ctx.columns.level(0.0, &beta, &gamma);
        let density: Vec<f64> = (0..ctx.grid.cells()).map(|_| rng.random_range(0.5..2.0)).collect();
        let carrier: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let forms = midpoint_forms(
            &ctx.grid,
            &ctx.tables,
            &level,
            &density,
            &vec![0.0; density.len()],
            &ctx.tables.cell_velocity(&carrier),
        );
        let q = DVector::from_iterator(8, (0..8).map(|_| rng.random_range(-1.0..1.0)));
        let c = &forms.convective;
        assert!(q.dot(&(c * &q)).abs() < 1e-12 * c.amax().max(1.0));
        assert!((c + c.transpose()).amax() == 0.0);
    }
}

#[test]
fn penalty_pulls_the_trace_toward_the_plate() {
    let k = 3;
    let gap = 0.01;
    let dt = 0.02;
    let mut alpha = DVector::zeros(2 * k);
    alpha[k] = gap;
    let zero = DMatrix::zeros(2 * k, 2 * k);
    let rhs = momentum_rhs(&alpha, &zero, &zero, &zero, &DVector::zeros(2 * k), &[0.0; 3], dt).unwrap();
    assert!((rhs[k] + gap / (2.0 * dt)).abs() < 1e-15);
    assert!(rhs.iter().enumerate().all(|(i, v)| i == k || *v == 0.0));
    assert!(matches!(
        momentum_rhs(&alpha, &zero, &zero, &zero, &DVector::zeros(2 * k), &[0.0; 2], dt),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn fixed_point_converges_monotonically_and_reproducibly() {
    let ctx = context(4, 16, 8);
    let n = 8;
    let dt = 0.01;
    let p = params(dt, n);
    let state = FluidState { r: vec![1.0; ctx.grid.cells()], alpha: vec![0.0; 8], t: 0.0 };
    let levels = flat_levels(&ctx, dt, n);
    let first = fsp_fixed_point(&ctx, &p, &state, &levels, false).unwrap();
    assert!(first.report.increment <= p.picard_tol);
    assert!(first.report.history.windows(2).all(|h| h[1] < h[0]), "{:?}", first.report.history);
    // A second solve from the same data reproduces the state bit for bit.
    let again = fsp_fixed_point(&ctx, &p, &state, &levels, false).unwrap();
    assert_eq!(again.state, first.state);
    assert!(first.mass_end > 0.0 && (first.mass_end - first.mass_start).abs() < 1e-12 * first.mass_start);
    assert!(first.energy.inequality_margin(dt) >= 0.0);
}

#[test]
fn fixed_point_validates_inputs() {
    let ctx = context(2, 8, 4);
    let p = params(0.01, 4);
    let good = FluidState { r: vec![1.0; ctx.grid.cells()], alpha: vec![0.0; 4], t: 0.0 };
    let levels = flat_levels(&ctx, 0.01, 4);
    assert!(matches!(
        fsp_fixed_point(&ctx, &p, &good, &levels[..5], false),
        Err(Error::DimensionMismatch { .. })
    ));
    let mut bad = good.clone();
    bad.r[3] = 0.0;
    assert!(matches!(
        fsp_fixed_point(&ctx, &p, &bad, &levels, false),
        Err(Error::NonPositiveDensity { cell: 3, .. })
    ));
    let mut starved = p;
    starved.picard_max_iter = 1;
    starved.picard_tol = 1e-30;
    let moving = FluidState { alpha: vec![0.1, 0.0, 0.2, 0.0], ..good };
    assert!(matches!(
        fsp_fixed_point(&ctx, &starved, &moving, &levels, false),
        Err(Error::FixedPointDiverged { iterations: 1, .. })
    ));
}

#[test]
fn density_stays_inside_the_envelope_with_a_moving_plate() {
    let ctx = context(4, 16, 8);
    let n = 8;
    let dt = 0.01;
    let beta0 = [0.02, -0.01, 0.0, 0.0];
    let gamma = [0.5, 0.2, -0.1, 0.0];
    let levels: Vec<_> = (0..=2 * n)
        .map(|j| {
            let t = dt * j as f64 / (2 * n) as f64;
            let beta: Vec<f64> = beta0.iter().zip(&gamma).map(|(b, g)| b + g * t).collect();
            ctx.columns.level(t, &beta, &gamma)
        })
        .collect();
    let r = ctx.grid.sample(|x, z| 1.0 + 0.2 * (PI * x).cos() * (PI * z).cos());
    let state = FluidState { r, alpha: vec![0.1, -0.2, 0.0, 0.1, 0.0, 0.3, 0.0, 0.0], t: 0.0 };
    for closure in [TopClosure::Conservative, TopClosure::Outflow] {
        let mut p = params(dt, n);
        p.closure = closure;
        let out = fsp_fixed_point(&ctx, &p, &state, &levels, true).unwrap();
        assert!(out.envelope.excess(1e-6) <= 0.0, "{closure:?}: {:?}", out.envelope);
        assert!(out.report.density_min > 0.0);
        assert_eq!(out.densities.len(), n + 1);
        assert_eq!(out.trace_samples().len(), n + 1);
        if closure == TopClosure::Conservative {
            assert!((out.mass_end - out.mass_start).abs() <= 1e-10 * out.mass_start);
        }
    }
}
