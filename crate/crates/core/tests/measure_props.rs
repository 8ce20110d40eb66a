//! Dirichlet measures of constraint sets.

mod common;

use polykt::constraints::{
    constrained_moment_ratio, dirichlet_measure, dirichlet_measure_monte_carlo, jeffreys_constant, Backend,
    BackendPreference, ConstraintSet, DirichletParams, IntegrationConfig,
};
use proptest::prelude::*;

fn interval(a: f64, b: f64) -> ConstraintSet {
    ConstraintSet::boxed(vec![a], vec![b]).unwrap()
}

fn alpha(v: &[f64]) -> DirichletParams {
    DirichletParams::new(v.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn nested_intervals_are_monotone(a in 0.0f64..0.4, w in 0.05f64..0.3, grow in 0.0f64..0.3,
                                     p in 0.3f64..20.0, q in 0.3f64..20.0) {
        let cfg = IntegrationConfig::default();
        let inner = dirichlet_measure(&interval(a, a + w), &alpha(&[p, q]), &cfg).unwrap();
        let outer = dirichlet_measure(&interval((a - grow).max(0.0), (a + w + grow).min(1.0)), &alpha(&[p, q]), &cfg).unwrap();
        prop_assert!(inner.log_value <= outer.log_value + 1e-12);
    }

    #[test]
    fn complementary_intervals_add_to_one(c in 0.0f64..=1.0, p in 0.2f64..50.0, q in 0.2f64..50.0) {
        let cfg = IntegrationConfig::default();
        let lo = dirichlet_measure(&interval(0.0, c), &alpha(&[p, q]), &cfg).map(|e| e.value()).unwrap_or(0.0);
        let hi = dirichlet_measure(&interval(c, 1.0), &alpha(&[p, q]), &cfg).map(|e| e.value()).unwrap_or(0.0);
        prop_assert!((lo + hi - 1.0).abs() <= 1e-9, "{} + {}", lo, hi);
    }

    #[test]
    fn interval_measure_matches_quadrature_oracle(a in 0.0f64..0.9, w in 0.02f64..0.1, p in 0.3f64..40.0, q in 0.3f64..40.0) {
        let b = (a + w).min(1.0);
        let got = dirichlet_measure(&interval(a, b), &alpha(&[p, q]), &IntegrationConfig::default()).unwrap();
        prop_assert_eq!(got.backend, Backend::Exact);
        let want = common::ln_beta_interval(a, b, p, q);
        prop_assert!((got.log_value - want).abs() <= 1e-9, "{} vs {}", got.log_value, want);
    }

    #[test]
    fn moment_ratio_is_a_probability_vector(l0 in 0.0f64..0.3, l1 in 0.0f64..0.3, w0 in 0.2f64..0.6, w1 in 0.2f64..0.6,
                                           k in proptest::collection::vec(0u64..40, 3), mc in any::<bool>()) {
        let set = ConstraintSet::boxed(vec![l0, l1], vec![l0 + w0, l1 + w1]).unwrap();
        let cfg = IntegrationConfig {
            samples: 4000,
            backend: if mc { BackendPreference::MonteCarlo } else { BackendPreference::Auto },
            ..IntegrationConfig::default()
        };
        let r = constrained_moment_ratio(&set, &DirichletParams::from_counts(&k), &cfg).unwrap();
        prop_assert!(r.probs.iter().all(|&p| p >= 0.0));
        let total: f64 = r.probs.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        prop_assert!(set.contains(&polykt::SimplexPoint::new(r.probs.clone()).unwrap()).unwrap());
    }
}

/// Monte Carlo against quadrature for three-symbol boxes.
#[test]
fn monte_carlo_agrees_with_quadrature() {
    let mut rng = common::rng(31);
    use rand::Rng;
    for i in 0..30u64 {
        let lower: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..0.3)).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0.2..0.6)).collect();
        let set = ConstraintSet::boxed(lower, upper).unwrap();
        let a = alpha(&[rng.random_range(0.4..4.0), rng.random_range(0.4..4.0), rng.random_range(0.4..4.0)]);
        let cfg = IntegrationConfig { seed: i, ..IntegrationConfig::default() };
        let q = dirichlet_measure(&set, &a, &cfg).unwrap();
        assert_eq!(q.backend, Backend::Quadrature);
        let mc = dirichlet_measure_monte_carlo(&set, &a, &cfg).unwrap();
        let z = (mc.value() - q.value()).abs() / mc.std_error;
        assert!(z <= 4.0, "instance {i}: quadrature {} vs MC {} ± {}", q.value(), mc.value(), mc.std_error);
    }
}

#[test]
fn whole_simplex_is_exactly_one() {
    for m in [2, 3, 7] {
        let c = jeffreys_constant(&ConstraintSet::full(m).unwrap(), &IntegrationConfig::default()).unwrap();
        assert_eq!(c.log_value, 0.0);
        assert_eq!(c.backend, Backend::Exact);
    }
    // symmetry: half of the binary simplex
    let half = jeffreys_constant(&interval(0.0, 0.5), &IntegrationConfig::default()).unwrap();
    assert!((half.value() - 0.5).abs() < 1e-14);
}
