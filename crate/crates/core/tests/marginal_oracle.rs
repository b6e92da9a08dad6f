mod common;

use ccg_core::marginals::{brute_force_marginal, sample_strategy, softmin_marginal, weight_pushing};
use ccg_core::tape::Tape;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_enumeration_on_random_costs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (name, zdd) in common::oracle_families() {
        let family = zdd.enumerate(1 << 16).unwrap();
        for _ in 0..100 {
            let c: Vec<f64> = (0..zdd.num_vars()).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let x = softmin_marginal(&zdd, &c).unwrap();
            let reference = brute_force_marginal(&family, &c).unwrap();
            let err = common::max_abs_diff(&x, &reference);
            assert!(err <= 1e-10, "{name}: error {err:e}");
            assert!(x.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)), "{name}: {x:?}");
        }
    }
}

#[test]
fn partition_function_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (name, zdd) in common::oracle_families() {
        let family = zdd.enumerate(1 << 16).unwrap();
        let c: Vec<f64> = (0..zdd.num_vars()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let ws = weight_pushing(&zdd, &c).unwrap();
        let z: f64 = family.iter().map(|s| (-s.iter().map(|&i| c[i]).sum::<f64>()).exp()).sum();
        let root = zdd.root() as usize;
        assert!((ws.log_b[root] - z.ln()).abs() < 1e-12, "{name}");
    }
}

#[test]
fn shift_invariance_on_equal_cardinality_family() {
    let zdd = common::k4_cycles();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let shifted: Vec<f64> = c.iter().map(|v| v + 7.0).collect();
        let a = softmin_marginal(&zdd, &c).unwrap();
        let b = softmin_marginal(&zdd, &shifted).unwrap();
        assert!(common::max_abs_diff(&a, &b) < 1e-12);
    }
}

#[test]
fn tape_growth_is_linear_in_diagram_size() {
    for (name, zdd) in common::oracle_families() {
        let tape = Tape::new();
        let c: Vec<_> = (0..zdd.num_vars()).map(|i| tape.input(0.1 * i as f64).unwrap()).collect();
        let before = tape.len();
        softmin_marginal(&zdd, &c).unwrap();
        let added = tape.len() - before;
        assert!(added <= 8 * zdd.size(), "{name}: {added} nodes for |Z| = {}", zdd.size());
    }
}

#[test]
fn jacobian_matches_finite_differences() {
    let zdd = common::braess_zdd();
    let c0 = [0.3, -0.2, 0.7, 0.1, -0.4];
    let h = 1e-5;
    for out in 0..5 {
        let tape = Tape::new();
        let c: Vec<_> = c0.iter().map(|&v| tape.input(v).unwrap()).collect();
        let x = softmin_marginal(&zdd, &c).unwrap();
        let grad = tape.backward(x[out]).unwrap();
        for j in 0..5 {
            let mut plus = c0;
            let mut minus = c0;
            plus[j] += h;
            minus[j] -= h;
            let fd = (softmin_marginal(&zdd, &plus).unwrap()[out]
                - softmin_marginal(&zdd, &minus).unwrap()[out])
                / (2.0 * h);
            assert!((grad[j] - fd).abs() / (1.0 + fd.abs()) <= 1e-5, "dx{out}/dc{j}");
        }
    }
}

#[test]
fn sampler_frequencies() {
    let zdd = common::braess_zdd();
    let family = zdd.enumerate(16).unwrap();
    let draws = 100_000;
    let mut counts = vec![0usize; family.len()];
    let mut sampler = ccg_core::marginals::StrategySampler::new(&zdd, &[0.0; 5], 42).unwrap();
    for _ in 0..draws {
        let s = sampler.sample();
        let k = family.iter().position(|f| *f == s).expect("sample is a member");
        counts[k] += 1;
    }
    let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
    for &k in &counts {
        assert!((k as f64 - draws as f64 * 0.25).abs() <= 3.0 * sigma, "{counts:?}");
    }

    let mut sampler =
        ccg_core::marginals::StrategySampler::new(&zdd, &[0.0, 0.0, 50.0, 0.0, 0.0], 7).unwrap();
    for _ in 0..10_000 {
        assert!(!sampler.sample().contains(&2));
    }
    assert_eq!(sample_strategy(&zdd, &[0.0; 5], 9).unwrap(), sample_strategy(&zdd, &[0.0; 5], 9).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn oracle_equivalence(c in proptest::collection::vec(-20.0f64..20.0, 12), pick in 0usize..5) {
        let (_, zdd) = common::oracle_families().swap_remove(pick);
        let c = &c[..zdd.num_vars()];
        let family = zdd.enumerate(1 << 16).unwrap();
        let x = softmin_marginal(&zdd, c).unwrap();
        let reference = brute_force_marginal(&family, c).unwrap();
        prop_assert!(common::max_abs_diff(&x, &reference) <= 1e-10);
    }

    #[test]
    fn recorded_and_plain_values_agree(c in proptest::collection::vec(-20.0f64..20.0, 5)) {
        let zdd = common::braess_zdd();
        let tape = Tape::new();
        let vars: Vec<_> = c.iter().map(|&v| tape.input(v).unwrap()).collect();
        let recorded = softmin_marginal(&zdd, &vars).unwrap();
        let plain = softmin_marginal(&zdd, &c).unwrap();
        for (r, p) in recorded.iter().zip(&plain) {
            prop_assert_eq!(r.value(), *p);
        }
    }
}
