use nalgebra::DVector;
use proptest::prelude::*;

use fsisplit::bases::{FluidBasis, PlateBasis};
use fsisplit::driver::{handoff_validate, ContinuationPolicy, Handoff};
use fsisplit::fsp::momentum::{assemble_mass_matrix, midpoint_forms, min_eigenvalue};
use fsisplit::fsp::{CellGrid, FluidState, FspContext};
use fsisplit::geometry::{ale_map_point, inverse_map_point};
use fsisplit::quadrature::LineRule;
use fsisplit::ssp::{Nonlinearity, PlateState};
use fsisplit::RunConfig;

fn context() -> FspContext {
    let plate = PlateBasis::new(3, 1.0).unwrap();
    let fluid = FluidBasis::new(&plate);
    FspContext::new(CellGrid::new(8, 4, 1.0).unwrap(), &fluid, &plate)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_map_undoes_the_map(w in -0.95f64..3.0, x in 0.0f64..1.0, z in -1.0f64..0.0) {
        let (xp, zp) = ale_map_point(w, x, z).unwrap();
        prop_assert!(zp >= -1.0 && zp <= w + 1e-15);
        let (x2, z2) = inverse_map_point(w, xp, zp).unwrap();
        prop_assert_eq!(x2, x);
        prop_assert!((z2 - z).abs() <= 4.0 * f64::EPSILON / (1.0 + w));
    }

    #[test]
    fn weighted_mass_matrix_is_symmetric_positive_definite(
        r in prop::collection::vec(0.05f64..5.0, 32),
        jac in prop::collection::vec(0.2f64..2.0, 8),
    ) {
        let ctx = context();
        let m = assemble_mass_matrix(&ctx.grid, &ctx.tables, &r, &jac).unwrap();
        prop_assert_eq!(&m, &m.transpose());
        prop_assert!(min_eigenvalue(&m) > 0.0);
    }

    #[test]
    fn convective_form_is_skew_for_any_carrier(
        beta in prop::collection::vec(-0.1f64..0.1, 3),
        gamma in prop::collection::vec(-1.0f64..1.0, 3),
        r in prop::collection::vec(0.2f64..3.0, 32),
        carrier in prop::collection::vec(-2.0f64..2.0, 6),
        q in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let ctx = context();
        let level = ctx.columns.level(0.0, &beta, &gamma);
        let forms = midpoint_forms(&ctx.grid, &ctx.tables, &level, &r, &vec![0.0; 32], &ctx.tables.cell_velocity(&carrier));
        let q = DVector::from_vec(q);
        let c = &forms.convective;
        prop_assert!(q.dot(&(c * &q)).abs() <= 1e-12 * c.amax().max(1.0));
    }

    #[test]
    fn potentials_respect_their_lower_bounds(
        beta in prop::collection::vec(-1.0f64..1.0, 4),
        q1 in 0.01f64..3.0,
        q2 in -3.0f64..3.0,
    ) {
        let plate = PlateBasis::new(4, 1.0).unwrap();
        let table = plate.tabulate(&LineRule::for_plate(1.0, 4));
        prop_assert_eq!(Nonlinearity::LinearZero.potential(&beta, &table), 0.0);
        prop_assert!(Nonlinearity::CubicQuasilinear.potential(&beta, &table) >= 0.0);
        // ¼q1 s² - ½q2 s is smallest at s = q2/q1.
        let berger = Nonlinearity::BergerType { q1, q2 }.potential(&beta, &table);
        let floor = if q2 > 0.0 { -q2 * q2 / (4.0 * q1) } else { 0.0 };
        prop_assert!(berger >= floor - 1e-12 * floor.abs().max(1.0));
    }

    #[test]
    fn handoff_detects_any_single_bit_flip(field in 0usize..4, index in 0usize..3, bit in 0u32..64) {
        let h = Handoff {
            plate: PlateState { beta: vec![0.1, 0.2, 0.3], gamma: vec![-1.0, 0.5, 0.0], alpha: vec![1.0, 2.0, 3.0], t: 0.5 },
            fluid: FluidState { r: vec![1.0, 0.9, 1.1], alpha: vec![0.0; 6], t: 0.5 },
        };
        let mut g = h.clone();
        let slot = match field {
            0 => &mut g.plate.beta[index],
            1 => &mut g.plate.gamma[index],
            2 => &mut g.fluid.r[index],
            _ => &mut g.fluid.alpha[index],
        };
        *slot = f64::from_bits(slot.to_bits() ^ (1u64 << bit));
        prop_assert!(handoff_validate(&h, &g).is_err());
    }

    #[test]
    fn configuration_survives_a_toml_round_trip(
        k in 1usize..8,
        nx in 4usize..64,
        windows in 1usize..100,
        eps in 1e-4f64..1.0,
        seed in any::<u64>(),
    ) {
        let mut c = RunConfig::default();
        c.discretization.k = k;
        c.discretization.nx = nx;
        c.time.windows = windows;
        c.fluid.epsilon = eps;
        c.output.seed = seed;
        let text = c.to_toml_string();
        prop_assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
    }

    #[test]
    fn continuation_horizons_increase_and_minima_decrease(
        depth in 0.0f64..0.99,
        rate in 0.1f64..50.0,
        constant in 0.1f64..5.0,
    ) {
        let policy = ContinuationPolicy { energy_constant: constant, floor: 1e-3, max_extensions: 500, horizon_cap: 10.0 };
        let history = |t0: f64, t1: f64| {
            let f = |t: f64| 1.0 - depth * (1.0 - (-rate * t).exp());
            f(t0).min(f(t1))
        };
        let trace = policy.run(&history);
        prop_assert!(trace.horizons.windows(2).all(|p| p[1] > p[0]));
        prop_assert!(trace.minima.windows(2).all(|p| p[1] <= p[0]));
        prop_assert_eq!(trace.horizons.len(), trace.minima.len());
    }
}
