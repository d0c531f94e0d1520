mod common;

use common::{dwd_grid_oracle, dwd_objective, separable_2d};
use diproperm::direction::{dwd_direction, dwd_loss, dwd_loss_derivative, penalty_parameter, training_error};
use diproperm::SolverOptions;
use proptest::prelude::*;

#[test]
fn solver_matches_grid_search_on_separable_planes() {
    for seed in 0..20 {
        let ds = separable_2d(seed);
        let c = penalty_parameter(&ds).unwrap();
        let model = dwd_direction(&ds, c, &SolverOptions::default()).unwrap();
        let (oracle, w, _) = dwd_grid_oracle(&ds, c, 10_000);
        let rel = (model.objective - oracle).abs() / oracle.abs();
        assert!(
            rel <= 1e-3,
            "seed {seed}: solver {} oracle {oracle} rel {rel}",
            model.objective
        );
        let reported = &model.direction;
        let reported_obj = dwd_objective(&ds, &reported.w, reported.beta, c);
        assert!((reported_obj - oracle).abs() / oracle <= 1e-3);
        let cos = reported.w[0] * w[0] + reported.w[1] * w[1];
        assert!(cos > 0.999, "seed {seed}: cos {cos}");
        assert_eq!(training_error(&ds, reported), 0.0);
    }
}

#[test]
fn loss_is_c1_at_the_knot() {
    for c in [0.01, 0.5, 1.0, 7.142857, 100.0, 2500.0] {
        let knot = 1.0 / f64::sqrt(c);
        let below = knot * (1.0 - 1e-12);
        let above = knot * (1.0 + 1e-12);
        assert!((dwd_loss(below, c) - dwd_loss(above, c)).abs() < 1e-10 * c.sqrt().max(1.0));
        assert!((dwd_loss_derivative(below, c) - dwd_loss_derivative(above, c)).abs() < 1e-10 * c.max(1.0));
        assert!((dwd_loss(knot, c) - c.sqrt()).abs() < 1e-10 * c.sqrt());
        assert!((dwd_loss_derivative(knot, c) + c).abs() < 1e-10 * c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn loss_is_convex_and_decreasing(c in 0.01f64..1000.0, a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(dwd_loss(lo, c) >= dwd_loss(hi, c) - 1e-12);
        let mid = 0.5 * (lo + hi);
        let chord = 0.5 * (dwd_loss(lo, c) + dwd_loss(hi, c));
        prop_assert!(dwd_loss(mid, c) <= chord + 1e-9 * chord.abs().max(1.0));
        prop_assert!(dwd_loss_derivative(lo, c) <= dwd_loss_derivative(hi, c) + 1e-12);
    }
}
