use neei_core::geometry::Vec2;
use neei_core::geomworld::*;
use neei_core::scenario::oracle::{random_convex_polygon, sampled_distance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn polygon() -> impl Strategy<Value = ConvexPolygon> {
    any::<u64>().prop_map(|s| random_convex_polygon(&mut ChaCha8Rng::seed_from_u64(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_is_symmetric(a in polygon(), b in polygon()) {
        prop_assert_eq!(min_distance(&a, &b), min_distance(&b, &a));
    }

    #[test]
    fn distance_translation_invariant(a in polygon(), b in polygon(), dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
        let by = Vec2::new(dx, dy);
        let d0 = min_distance(&a, &b);
        let d1 = min_distance(&a.translated(by), &b.translated(by));
        prop_assert!((d0 - d1).abs() <= 1e-12 * (1.0 + by.norm()), "{} vs {}", d0, d1);
    }

    #[test]
    fn distance_matches_boundary_sampling(a in polygon(), b in polygon()) {
        let exact = min_distance(&a, &b);
        prop_assert!((exact - sampled_distance(&a, &b, 10_000)).abs() < 1e-3);
    }

    #[test]
    fn exact_arc_halving_agrees(v in 0.0..0.5f64, w in -1.5..1.5f64, theta in -3.0..3.0f64) {
        let limits = ControlLimits { v_max: 0.5, omega_max: 1.5 };
        let s = RobotState::new(Vec2::new(1.0, -2.0), theta, std::sync::Arc::new(default_footprint())).unwrap();
        let u = ControlInput::new(v, w);
        let one = step_dynamics(&s, u, 0.1, &limits).unwrap();
        let two = step_dynamics(&step_dynamics(&s, u, 0.05, &limits).unwrap(), u, 0.05, &limits).unwrap();
        prop_assert!(one.position.distance(two.position) < 1e-12);
        prop_assert!((one.heading - two.heading).abs() < 1e-12);
    }
}

#[test]
fn euler_error_is_second_order_per_step() {
    let limits = ControlLimits { v_max: 0.5, omega_max: 1.5 };
    let s = RobotState::new(Vec2::ZERO, 0.3, std::sync::Arc::new(default_footprint())).unwrap();
    let u = ControlInput::new(0.5, 1.2);
    let gap = |dt: f64| {
        let one = step_dynamics_with(&s, u, dt, &limits, Integrator::Euler).unwrap();
        let half = step_dynamics_with(&s, u, dt / 2.0, &limits, Integrator::Euler).unwrap();
        let two = step_dynamics_with(&half, u, dt / 2.0, &limits, Integrator::Euler).unwrap();
        one.position.distance(two.position)
    };
    let ratio = gap(0.1) / gap(0.05);
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
}
