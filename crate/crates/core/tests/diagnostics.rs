use std::f64::consts::{E, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fsisplit::bases::Component;
use fsisplit::diagnostics::{
    compute_ledger, entropy_monitor, inequality_verdicts, korn_constant, korn_like_lower_bound, telescoped_bound,
    EnergyLedger, VerdictSettings,
};
use fsisplit::driver::{Setup, ENVELOPE_INFLATION, MASS_TOLERANCE};
use fsisplit::fsp::continuity::{theta_step, TransportLevel};
use fsisplit::fsp::momentum::viscous_matrix;
use fsisplit::fsp::{CellGrid, FluidState, TopClosure};
use fsisplit::quadrature::LineRule;
use fsisplit::ssp::PlateState;
use fsisplit::{run, Error, RunConfig};

fn setup(k: usize, nx: usize, nz: usize) -> (RunConfig, Setup) {
    let mut config = RunConfig::default();
    config.discretization.k = k;
    config.discretization.nx = nx;
    config.discretization.nz = nz;
    let setup = Setup::new(&config).unwrap();
    (config, setup)
}

fn fluid(setup: &Setup, r: f64, alpha: Vec<f64>) -> FluidState {
    FluidState { r: vec![r; setup.ctx.grid.cells()], alpha, t: 0.0 }
}

#[test]
fn resting_unit_density_has_only_internal_energy() {
    let (config, s) = setup(4, 32, 16);
    let ledger = compute_ledger(&s.ctx, &s.system, &s.params, &fluid(&s, 1.0, vec![0.0; 8]), &PlateState::zeros(4, 0.0))
        .unwrap();
    let gamma = config.fluid.gamma;
    assert!((ledger.internal - 1.0 / (gamma - 1.0)).abs() < 1e-12);
    assert_eq!(ledger.kinetic, 0.0);
    assert_eq!(ledger.viscous_rate, 0.0);
    assert_eq!(ledger.damping_rate, 0.0);
    assert_eq!(ledger.entropy, 0.0);
    assert!((ledger.mass - 1.0).abs() < 1e-12);
}

#[test]
fn unit_interior_mode_has_half_kinetic_energy() {
    let (_, s) = setup(4, 32, 16);
    let mut alpha = vec![0.0; 8];
    alpha[0] = 1.0;
    let ledger = compute_ledger(&s.ctx, &s.system, &s.params, &fluid(&s, 1.0, alpha), &PlateState::zeros(4, 0.0)).unwrap();
    assert!((ledger.kinetic - 0.5).abs() < 1e-12);
}

#[test]
fn viscous_dissipation_matches_closed_form() {
    let (config, s) = setup(4, 32, 16);
    // Vertical (1,1) mode scaled to U = (0, sin(πx) sin(π(z+1))).
    let idx = s
        .fluid_basis
        .interior
        .iter()
        .position(|m| m.m == 1 && m.n == 1 && m.component == Component::Z)
        .unwrap();
    let mut alpha = vec![0.0; 8];
    alpha[idx] = 0.5;
    let ledger = compute_ledger(&s.ctx, &s.system, &s.params, &fluid(&s, 1.0, alpha), &PlateState::zeros(4, 0.0)).unwrap();
    let (mu, lambda) = (config.fluid.mu, config.fluid.lambda);
    let exact = mu * PI * PI / 2.0 + (mu + lambda) * PI * PI / 4.0;
    assert!((ledger.viscous_rate - exact).abs() < 1e-10, "{} vs {exact}", ledger.viscous_rate);
    assert!((ledger.gradient_sq - PI * PI / 2.0).abs() < 1e-10);
    assert!((ledger.divergence_sq - PI * PI / 4.0).abs() < 1e-10);
}

#[test]
fn ledger_total_matches_direct_sum() {
    let (_, s) = setup(4, 16, 8);
    let plate = PlateState { beta: vec![0.02, -0.01, 0.0, 0.003], gamma: vec![0.1, 0.0, 0.2, 0.0], alpha: vec![0.0, 0.3, 0.0, 0.0], t: 0.0 };
    let mut f = fluid(&s, 1.0, vec![0.1, 0.0, -0.2, 0.0, 0.05, 0.0, 0.0, 0.1]);
    f.r.iter_mut().enumerate().for_each(|(c, r)| *r += 0.1 * (c as f64).sin());
    let l = compute_ledger(&s.ctx, &s.system, &s.params, &f, &plate).unwrap();
    assert!((l.total() - l.total_direct).abs() <= 1e-12 * l.total_direct.abs());
    assert!(l.kinetic >= 0.0 && l.internal >= 0.0 && l.bending >= 0.0 && l.heat >= 0.0 && l.regularizer >= 0.0);
    assert_eq!(l.plate_kinetic_half, 2.0 * l.plate_kinetic_quarter);
}

#[test]
fn kinetic_energy_agrees_with_the_physical_domain_integral() {
    let (_, s) = setup(3, 96, 48);
    let plate = PlateState { beta: vec![0.15, -0.05, 0.02], gamma: vec![0.0; 3], alpha: vec![0.0; 3], t: 0.0 };
    let alpha = vec![0.3, -0.2, 0.1, 0.2, 0.0, -0.1];
    let l = compute_ledger(&s.ctx, &s.system, &s.params, &fluid(&s, 1.0, alpha.clone()), &plate).unwrap();
    // ½ ∫_Γ ∫_{-1}^{w(x)} |U(A⁻¹(x, y))|² dy dx with Gauss rules in both directions.
    let xs = LineRule::composite(0.0, 1.0, 48, 8);
    let mut physical = 0.0;
    for (&x, &wx) in xs.points.iter().zip(&xs.weights) {
        let w = s.plate_basis.synthesize(&plate.beta, x)[0];
        let ys = LineRule::composite(-1.0, w, 24, 8);
        for (&y, &wy) in ys.points.iter().zip(&ys.weights) {
            let z = (y - w) / (1.0 + w);
            let u = (0..6).fold([0.0, 0.0], |acc, i| {
                let g = s.fluid_basis.sample(i, x, z).value;
                [acc[0] + alpha[i] * g[0], acc[1] + alpha[i] * g[1]]
            });
            physical += 0.5 * wx * wy * (u[0] * u[0] + u[1] * u[1]);
        }
    }
    assert!((l.kinetic - physical).abs() < 1e-3 * physical, "{} vs {physical}", l.kinetic);
}

#[test]
fn korn_constant_examples() {
    assert_eq!(korn_constant(1.0, 0.5), 1.0);
    assert_eq!(korn_constant(1.0, -0.5), 1.0);
    assert!((korn_constant(1.0, -1.2) - 0.6).abs() < 1e-15);
}

#[test]
fn korn_bound_survives_random_search() {
    let (_, s) = setup(4, 16, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mu = 0.1;
    for lambda in [0.0, -mu / 2.0, -2.0 * mu / 3.0 + 0.01, -1.2 * mu] {
        let c = korn_constant(mu, lambda);
        let mut min_ratio = f64::INFINITY;
        for _ in 0..100 {
            let beta: Vec<f64> = (0..4).map(|_| rng.random_range(-0.1..0.1)).collect();
            let level = s.ctx.columns.level(0.0, &beta, &[0.0; 4]);
            let k_full = viscous_matrix(&s.ctx.grid, &s.ctx.tables, &level, mu, lambda);
            let k_grad = viscous_matrix(&s.ctx.grid, &s.ctx.tables, &level, 1.0, -1.0);
            let a = nalgebra::DVector::from_iterator(8, (0..8).map(|_| rng.random_range(-1.0..1.0)));
            let full = a.dot(&(&k_full * &a));
            let grad = a.dot(&(&k_grad * &a));
            min_ratio = min_ratio.min(full / grad);
        }
        assert!(min_ratio > 0.0 && min_ratio >= c * (1.0 - 1e-12), "λ={lambda}: {min_ratio} < {c}");
    }
}

#[test]
fn entropy_examples() {
    let grid = CellGrid::new(8, 4, 2.0).unwrap();
    let ones = vec![1.0; grid.nx];
    assert_eq!(entropy_monitor(&grid, &vec![1.0; grid.cells()], &ones).unwrap(), 0.0);
    let e = entropy_monitor(&grid, &vec![E; grid.cells()], &ones).unwrap();
    assert!((e - 2.0 * E).abs() < 1e-12);
    let mut r = vec![1.0; grid.cells()];
    r[2] = 0.0;
    assert!(matches!(entropy_monitor(&grid, &r, &ones), Err(Error::NonPositiveDensity { cell: 2, .. })));
}

#[test]
fn entropy_decreases_under_pure_damping() {
    let (_, s) = setup(2, 16, 8);
    let grid = &s.ctx.grid;
    let level = s.ctx.columns.level(0.0, &[0.0; 2], &[0.0; 2]);
    let velocity = s.ctx.tables.face_velocity(&[0.0; 4]);
    let mesh = vec![0.0; grid.nx];
    let tl = TransportLevel { geometry: &level, velocity: &velocity, mesh_velocity: &mesh };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut r: Vec<f64> = (0..grid.cells()).map(|_| rng.random_range(0.5..2.0)).collect();
    let ones = vec![1.0; grid.nx];
    let mut entropy = entropy_monitor(grid, &r, &ones).unwrap();
    for _ in 0..50 {
        r = theta_step(grid, &r, &tl, &tl, 0.01, 0.05, 1.0, TopClosure::Conservative).unwrap().density;
        let next = entropy_monitor(grid, &r, &ones).unwrap();
        assert!(next <= entropy + 1e-14);
        entropy = next;
    }
}

fn settings(config: &RunConfig) -> VerdictSettings {
    VerdictSettings {
        dt: config.dt(),
        t_final: config.time.t_final,
        identity_tol: config.solver.identity_tol,
        envelope_inflation: ENVELOPE_INFLATION,
        mass_tol: MASS_TOLERANCE,
        closure: config.fluid.top_closure,
        coercivity: (0.0, 0.0),
        mu: config.fluid.mu,
        lambda: config.fluid.lambda,
        v0_sq: 0.0,
    }
}

#[test]
fn empty_run_passes_with_infinite_margin() {
    let verdicts = inequality_verdicts(&[], &[], &settings(&RunConfig::default()));
    assert_eq!(verdicts.len(), 8);
    assert!(verdicts.iter().all(|v| v.passed && v.margin == f64::INFINITY));
    assert!(korn_like_lower_bound(&[], 0.1, 0.0).passed);
}

#[test]
fn injected_energy_breaks_the_telescoped_bound() {
    let mut config = RunConfig::default();
    config.time.t_final = 0.1;
    config.time.windows = 10;
    let out = run(&config).unwrap();
    let settings = settings(&config);
    let clean = inequality_verdicts(&out.windows, &out.ledger, &settings);
    assert!(clean.iter().all(|v| v.passed), "{clean:?}");
    assert_eq!(clean, out.verdicts);

    let mut corrupted = out.windows.clone();
    corrupted[4].fsp_energy.energy_end += 0.5;
    corrupted[4].ssp.energy_end += 0.5;
    let rows = telescoped_bound(&corrupted, 0.0, config.dt(), config.time.t_final, 0.0);
    assert!(rows[..4].iter().all(|r| r.lhs <= r.rhs));
    assert!(rows[4].lhs > rows[4].rhs);
    let verdicts = inequality_verdicts(&corrupted, &out.ledger, &settings);
    let tele = verdicts.iter().find(|v| v.name == "telescoped_bound").unwrap();
    assert!(!tele.passed && tele.margin < 0.0);
}

#[test]
fn ledger_csv_row_matches_header() {
    let l = EnergyLedger::default();
    assert_eq!(l.csv_row().split(',').count(), EnergyLedger::CSV_HEADER.split(',').count());
}
