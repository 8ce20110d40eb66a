//! Compression: lossless round trips, the length budget, and the saving
//! from a correct constraint.

mod common;

use polykt::codec::{codelength_bits, decode, encode};
use polykt::constraints::{ConstraintSet, IntegrationConfig};
use proptest::prelude::*;

fn budget(n: usize) -> f64 {
    n as f64 * 2f64.powi(-16) * std::f64::consts::LOG2_E + 64.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binary_box_round_trip(a in 0.0f64..0.7, w in 0.05f64..0.3, seq in proptest::collection::vec(0usize..2, 0..400),
                             seed in any::<u64>()) {
        let set = ConstraintSet::boxed(vec![a], vec![(a + w).min(1.0)]).unwrap();
        let cfg = IntegrationConfig::default();
        let buf = encode(&seq, &set, &cfg, seed).unwrap();
        prop_assert_eq!(&decode(&buf, &set, &cfg).unwrap(), &seq);
        if !seq.is_empty() {
            let excess = buf.payload_bit_length() as f64 - codelength_bits(&seq, &set, &cfg).unwrap();
            prop_assert!((0.0..=budget(seq.len())).contains(&excess), "excess {}", excess);
        }
    }

    #[test]
    fn three_symbol_quadrature_round_trip(seq in proptest::collection::vec(0usize..3, 1..150)) {
        let set = ConstraintSet::boxed(vec![0.1, 0.05], vec![0.6, 0.5]).unwrap();
        let cfg = IntegrationConfig::default();
        let buf = encode(&seq, &set, &cfg, 3).unwrap();
        prop_assert_eq!(&decode(&buf, &set, &cfg).unwrap(), &seq);
        let excess = buf.payload_bit_length() as f64 - codelength_bits(&seq, &set, &cfg).unwrap();
        prop_assert!((0.0..=budget(seq.len())).contains(&excess), "excess {}", excess);
    }

    #[test]
    fn large_alphabet_round_trip(seq in proptest::collection::vec(0usize..40, 1..300)) {
        let set = ConstraintSet::full(40).unwrap();
        let cfg = IntegrationConfig::default();
        let buf = encode(&seq, &set, &cfg, 0).unwrap();
        prop_assert_eq!(&decode(&buf, &set, &cfg).unwrap(), &seq);
    }
}

/// Sources inside the box compress better with the constrained estimator
/// than with plain KT.
#[test]
fn constraint_benefit() {
    let boxed = ConstraintSet::boxed(vec![0.2], vec![0.6]).unwrap();
    let full = ConstraintSet::full(2).unwrap();
    let cfg = IntegrationConfig::default();
    let mut rng = common::rng(77);
    use rand::Rng;
    let (mut constrained, mut plain) = (0.0, 0.0);
    let trials = 200;
    for t in 0..trials {
        let theta = rng.random_range(0.2..0.6);
        let seq = common::sample_sequence(&mut rng, &[theta, 1.0 - theta], 2000);
        constrained += encode(&seq, &boxed, &cfg, t).unwrap().bit_length as f64;
        plain += encode(&seq, &full, &cfg, t).unwrap().bit_length as f64;
    }
    let (c, p) = (constrained / trials as f64, plain / trials as f64);
    assert!(c <= p + 0.5, "constrained {c:.2} vs KT {p:.2} bits");
}

#[test]
fn wrong_settings_are_refused() {
    let set = ConstraintSet::boxed(vec![0.2], vec![0.6]).unwrap();
    let cfg = IntegrationConfig::default();
    let buf = encode(&[0, 1, 1, 0, 1], &set, &cfg, 9).unwrap();
    let other = IntegrationConfig { quad_tol: 1e-8, ..cfg };
    assert!(decode(&buf, &set, &other).is_err());
    assert!(decode(&buf, &ConstraintSet::full(2).unwrap(), &cfg).is_err());
}
