#![allow(dead_code)]

use ccg_core::zdd::{fixtures, ClassKind, Designation, Graph, StrategyClass, Zdd};

pub fn braess_zdd() -> Zdd {
    let g = fixtures::braess();
    Zdd::build(&g, &StrategyClass::from_designation(ClassKind::Paths, &g).unwrap()).unwrap()
}

pub fn k4_cycles() -> Zdd {
    Zdd::build(&fixtures::complete(4), &StrategyClass::HamiltonianCycles).unwrap()
}

/// A diagram whose family is the single set {0} over one variable.
pub fn single_set() -> Zdd {
    let g = Graph::from_pairs(2, &[(0, 1)])
        .unwrap()
        .with_designation(Designation::OdPair { source: 0, target: 1 })
        .unwrap();
    Zdd::build(&g, &StrategyClass::from_designation(ClassKind::Paths, &g).unwrap()).unwrap()
}

/// Named fixture families, all with at most 12 edges.
pub fn fixture_families() -> Vec<(&'static str, Graph, StrategyClass)> {
    let paths = |g: Graph| {
        let c = StrategyClass::from_designation(ClassKind::Paths, &g).unwrap();
        (g, c)
    };
    let (braess, braess_c) = paths(fixtures::braess());
    let (grid33, grid33_c) = paths(fixtures::grid(3, 3));
    let (grid23, grid23_c) = paths(fixtures::grid(2, 3));
    let (pair, pair_c) = paths(fixtures::parallel_pair());
    let steiner = fixtures::steiner6();
    let steiner_c = StrategyClass::from_designation(ClassKind::Steiner, &steiner).unwrap();
    vec![
        ("braess paths", braess, braess_c),
        ("3x3 grid paths", grid33, grid33_c),
        ("2x3 grid paths", grid23, grid23_c),
        ("parallel pair paths", pair, pair_c),
        ("K3 cycles", fixtures::complete(3), StrategyClass::HamiltonianCycles),
        ("K4 cycles", fixtures::complete(4), StrategyClass::HamiltonianCycles),
        ("K5 cycles", fixtures::complete(5), StrategyClass::HamiltonianCycles),
        ("steiner6", steiner, steiner_c),
        (
            "3x3 grid steiner corners",
            fixtures::grid(3, 3),
            StrategyClass::SteinerTrees { terminals: vec![0, 2, 6, 8] },
        ),
    ]
}

/// The five families of the marginal oracle suite, as diagrams.
pub fn oracle_families() -> Vec<(&'static str, Zdd)> {
    let steiner = fixtures::steiner6();
    let grid = fixtures::grid(3, 3);
    vec![
        ("braess paths", braess_zdd()),
        ("K4 cycles", k4_cycles()),
        (
            "3x3 grid paths",
            Zdd::build(&grid, &StrategyClass::from_designation(ClassKind::Paths, &grid).unwrap()).unwrap(),
        ),
        (
            "steiner6",
            Zdd::build(&steiner, &StrategyClass::from_designation(ClassKind::Steiner, &steiner).unwrap())
                .unwrap(),
        ),
        ("single set", single_set()),
    ]
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Active-set solver for `min ½‖θ - v‖²` subject to `Σθ = r`, `θ ≥ 0`.
/// Variables fixed at zero are added while the free solution has negative
/// entries and released while their multipliers are negative.
pub fn active_set_projection(v: &[f64], r: f64) -> Vec<f64> {
    let n = v.len();
    let mut active = vec![false; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        let lambda = (free.iter().map(|&i| v[i]).sum::<f64>() - r) / free.len() as f64;
        let theta: Vec<f64> = (0..n).map(|i| if active[i] { 0.0 } else { v[i] - lambda }).collect();
        if let Some(worst) =
            free.iter().copied().filter(|&i| theta[i] < 0.0).min_by(|&a, &b| theta[a].total_cmp(&theta[b]))
        {
            active[worst] = true;
            continue;
        }
        // Multiplier of θ_i ≥ 0 is λ - v_i; release the most violated one.
        if let Some(release) = (0..n)
            .filter(|&i| active[i] && lambda - v[i] < -1e-14)
            .min_by(|&a, &b| (lambda - v[a]).total_cmp(&(lambda - v[b])))
        {
            active[release] = false;
            continue;
        }
        return theta;
    }
}
