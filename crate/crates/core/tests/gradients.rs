mod common;

use ccg_core::congestion::{CostKind, CostModel};
use ccg_core::equilibrium::SolverConfig;
use ccg_core::stackelberg::{outer_gradient, social_cost_at, tangential};
use ccg_core::tape::{Tape, Var};
use ccg_core::zdd::{fixtures, ClassKind, StrategyClass, Zdd};
use proptest::prelude::*;

/// A fixed expression over four inputs touching every primitive, kept in
/// safe domains for inputs in [-2, 2].
fn expression<'t>(x: &[Var<'t>]) -> Var<'t> {
    let a = (x[0] * x[1] - x[2]).exp();
    let b = (x[3] * x[3] + 1.0).ln();
    let c = x[0].logaddexp(-x[2]);
    let d = (x[1] + 3.0) / (x[3] * x[3] + 0.5);
    a * b + c - d
}

fn eval(x: &[f64]) -> f64 {
    let tape = Tape::new();
    let vars: Vec<_> = x.iter().map(|&v| tape.input(v).unwrap()).collect();
    expression(&vars).value()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tape_matches_central_differences(x in proptest::collection::vec(-2.0f64..2.0, 4)) {
        let tape = Tape::new();
        let vars: Vec<_> = x.iter().map(|&v| tape.input(v).unwrap()).collect();
        let grad = tape.backward(expression(&vars)).unwrap();
        let h = 1e-5;
        for j in 0..4 {
            let mut plus = x.clone();
            let mut minus = x.clone();
            plus[j] += h;
            minus[j] -= h;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
            prop_assert!((grad[j] - fd).abs() / (1.0 + fd.abs()) <= 1e-5);
        }
    }

    #[test]
    fn recording_is_deterministic(x in proptest::collection::vec(-2.0f64..2.0, 4)) {
        let run = || {
            let tape = Tape::new();
            let vars: Vec<_> = x.iter().map(|&v| tape.input(v).unwrap()).collect();
            let out = expression(&vars);
            (out.value().to_bits(), tape.backward(out).unwrap())
        };
        let (a, ga) = run();
        let (b, gb) = run();
        prop_assert_eq!(a, b);
        prop_assert_eq!(
            ga.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            gb.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}

fn fd_tangential(theta: &[f64], zdd: &Zdd, model: &CostModel, cfg: &SolverConfig) -> Vec<f64> {
    let h = 1e-5;
    let raw: Vec<f64> = (0..theta.len())
        .map(|j| {
            let mut plus = theta.to_vec();
            let mut minus = theta.to_vec();
            plus[j] += h;
            minus[j] -= h;
            (social_cost_at(&plus, zdd, model, cfg).unwrap()
                - social_cost_at(&minus, zdd, model, cfg).unwrap())
                / (2.0 * h)
        })
        .collect();
    tangential(&raw)
}

#[test]
fn outer_gradient_matches_finite_differences() {
    let zdd = common::braess_zdd();
    let cfg = SolverConfig::accelerated(50, 0.1);
    let points =
        [[1.0; 5], [0.0, 2.5, 0.0, 0.0, 2.5], [0.4, 1.6, 0.3, 1.2, 1.5], [2.0, 0.5, 1.0, 0.25, 1.25]];
    for kind in [CostKind::Fractional, CostKind::Exponential] {
        let model = CostModel::uniform(kind, 5);
        for theta in &points {
            let (_, grad) = outer_gradient(theta, &zdd, &model, &cfg).unwrap();
            let ad = tangential(&grad);
            let fd = fd_tangential(theta, &zdd, &model, &cfg);
            let scale = fd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let err = common::max_abs_diff(&ad, &fd) / scale;
            assert!(err <= 1e-4, "{kind:?} θ={theta:?}: relative error {err:e}");
        }
    }
}

#[test]
fn gradient_favours_removing_capacity_from_the_bridge() {
    let zdd = common::braess_zdd();
    let model = CostModel::uniform(CostKind::Fractional, 5);
    let (_, grad) = outer_gradient(&[1.0; 5], &zdd, &model, &SolverConfig::accelerated(50, 0.1)).unwrap();
    let t = tangential(&grad);
    assert!(t[2] > 0.0, "descent lowers θ₃: {t:?}");
}

#[test]
fn symmetric_instance_has_zero_tangential_gradient() {
    let g = fixtures::parallel_pair();
    let zdd = Zdd::build(&g, &StrategyClass::from_designation(ClassKind::Paths, &g).unwrap()).unwrap();
    for kind in [CostKind::Fractional, CostKind::Exponential] {
        let model = CostModel::uniform(kind, 2);
        let (_, grad) = outer_gradient(&[1.0, 1.0], &zdd, &model, &SolverConfig::default()).unwrap();
        let t = tangential(&grad);
        assert!(t.iter().all(|v| v.abs() < 1e-12), "{t:?}");
    }
}

#[test]
fn backward_is_cheap_relative_to_forward() {
    use std::time::Instant;
    let zdd = common::braess_zdd();
    let model = CostModel::uniform(CostKind::Exponential, 5);
    let cfg = SolverConfig::default();
    let mut ratios = Vec::new();
    for _ in 0..7 {
        let tape = Tape::new();
        let start = Instant::now();
        let theta: Vec<_> = (0..5).map(|_| tape.input(1.0).unwrap()).collect();
        let sol = ccg_core::equilibrium::solve_accelerated(
            &zdd,
            &model,
            &theta,
            &cfg,
            &ccg_core::equilibrium::NoClock,
        )
        .unwrap();
        let f = model.social_cost(&theta, &sol.y).unwrap();
        let forward = start.elapsed();
        let start = Instant::now();
        tape.backward(f).unwrap();
        let backward = start.elapsed();
        ratios.push(backward.as_secs_f64() / forward.as_secs_f64());
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    assert!(median <= 5.0, "backward/forward median ratio {median}");
}
