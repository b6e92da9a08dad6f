//! Oracle suites run by `ccg verify`, each producing measured errors
//! against thresholds.

use ccg_core::congestion::{CostKind, CostModel};
use ccg_core::equilibrium::{exponential_weights_error, solve_accelerated, NoClock, SolverConfig};
use ccg_core::marginals::{brute_force_marginal, softmin_marginal};
use ccg_core::stackelberg::{outer_gradient, project_theta, social_cost_at, tangential};
use ccg_core::zdd::Zdd;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest family the enumeration-based suites accept.
pub const ORACLE_FAMILY_LIMIT: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Structure,
    Marginal,
    Gradient,
    Weights,
    Projection,
}

impl Suite {
    pub const ALL: [Suite; 5] =
        [Suite::Structure, Suite::Marginal, Suite::Gradient, Suite::Weights, Suite::Projection];

    fn needs_enumeration(self) -> bool {
        matches!(self, Suite::Marginal | Suite::Weights)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyResult {
    pub suite: Suite,
    pub property: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl PropertyResult {
    fn at_most(suite: Suite, property: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self { suite, property: property.into(), measured, threshold, pass: measured <= threshold }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub results: Vec<PropertyResult>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("family has {0} members; enumeration oracles accept at most {ORACLE_FAMILY_LIMIT}")]
    TooLarge(String),
    #[error("{0}")]
    Solver(String),
}

fn solver_err(e: impl std::fmt::Display) -> VerifyError {
    VerifyError::Solver(e.to_string())
}

/// Runs `suites` on `zdd` with per-edge `lengths`.
pub fn run(zdd: &Zdd, lengths: &[f64], suites: &[Suite], seed: u64) -> Result<Report, VerifyError> {
    let mut report = Report::default();
    if let Err(e) = zdd.validate() {
        report.results.push(PropertyResult {
            suite: Suite::Structure,
            property: format!("structural invariants ({e})"),
            measured: 1.0,
            threshold: 0.0,
            pass: false,
        });
        return Ok(report);
    }
    let count = zdd.count();
    let enumerable = count.to_usize().is_some_and(|c| c <= ORACLE_FAMILY_LIMIT);
    if suites.iter().any(|s| s.needs_enumeration()) && !enumerable {
        return Err(VerifyError::TooLarge(count.to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &suite in suites {
        match suite {
            Suite::Structure => {
                report.results.push(PropertyResult::at_most(suite, "structural invariants", 0.0, 0.0))
            }
            Suite::Marginal => marginal_suite(zdd, &mut rng, &mut report)?,
            Suite::Gradient => gradient_suite(zdd, lengths, &mut report)?,
            Suite::Weights => weights_suite(zdd, lengths, &mut report)?,
            Suite::Projection => projection_suite(&mut rng, &mut report),
        }
    }
    Ok(report)
}

fn marginal_suite(zdd: &Zdd, rng: &mut ChaCha8Rng, report: &mut Report) -> Result<(), VerifyError> {
    if zdd.is_empty_family() {
        return Err(VerifyError::Solver("softmin over an empty family".into()));
    }
    let family = zdd.enumerate(ORACLE_FAMILY_LIMIT).map_err(solver_err)?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let c: Vec<f64> = (0..zdd.num_vars()).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let x = softmin_marginal(zdd, &c).map_err(solver_err)?;
        let reference = brute_force_marginal(&family, &c).map_err(solver_err)?;
        worst = worst.max(max_abs_diff(&x, &reference));
    }
    report.results.push(PropertyResult::at_most(
        Suite::Marginal,
        "softmin marginal vs enumeration, 100 random costs",
        worst,
        1e-10,
    ));
    Ok(())
}

fn gradient_suite(zdd: &Zdd, lengths: &[f64], report: &mut Report) -> Result<(), VerifyError> {
    let n = zdd.num_vars();
    let theta = vec![1.0; n];
    let cfg = SolverConfig::accelerated(50, 0.1);
    for kind in [CostKind::Fractional, CostKind::Exponential] {
        let model = CostModel::new(kind, 10.0, lengths.to_vec()).map_err(solver_err)?;
        let (_, grad) = outer_gradient(&theta, zdd, &model, &cfg).map_err(solver_err)?;
        let h = 1e-5;
        let mut fd = Vec::with_capacity(n);
        for j in 0..n {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += h;
            minus[j] -= h;
            let fp = social_cost_at(&plus, zdd, &model, &cfg).map_err(solver_err)?;
            let fm = social_cost_at(&minus, zdd, &model, &cfg).map_err(solver_err)?;
            fd.push((fp - fm) / (2.0 * h));
        }
        let (ad, fd) = (tangential(&grad), tangential(&fd));
        let scale = fd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        report.results.push(PropertyResult::at_most(
            Suite::Gradient,
            format!("{kind:?} outer gradient vs central differences (tangential, T = 50)"),
            max_abs_diff(&ad, &fd) / scale,
            1e-4,
        ));
    }
    Ok(())
}

fn weights_suite(zdd: &Zdd, lengths: &[f64], report: &mut Report) -> Result<(), VerifyError> {
    let model = CostModel::new(CostKind::Fractional, 10.0, lengths.to_vec()).map_err(solver_err)?;
    let cfg = SolverConfig { record_iterates: true, ..SolverConfig::accelerated(300, 0.1) };
    let sol =
        solve_accelerated(zdd, &model, &vec![1.0; zdd.num_vars()], &cfg, &NoClock).map_err(solver_err)?;
    let mut worst: f64 = 0.0;
    for snap in sol.trace.iterates.iter().filter(|s| s.t % 10 == 0) {
        let err =
            exponential_weights_error(zdd, &snap.cost, &snap.x, ORACLE_FAMILY_LIMIT).map_err(solver_err)?;
        worst = worst.max(err);
    }
    report.results.push(PropertyResult::at_most(
        Suite::Weights,
        "iterates equal exponential-weights marginals (every 10th of T = 300)",
        worst,
        1e-8,
    ));
    Ok(())
}

fn projection_suite(rng: &mut ChaCha8Rng, report: &mut Report) {
    let mut worst: f64 = 0.0;
    for &n in &[2usize, 5, 20] {
        for _ in 0..334 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            worst = worst.max(max_abs_diff(&project_theta(&v), &active_set_projection(&v, n as f64)));
        }
    }
    report.results.push(PropertyResult::at_most(
        Suite::Projection,
        "projection onto Θ vs active-set QP, 1002 inputs",
        worst,
        1e-9,
    ));
}

/// Active-set solver for `min ½‖θ - v‖²` subject to `Σθ = r`, `θ ≥ 0`.
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

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ccg_core::zdd::{fixtures, ClassKind, StrategyClass};

    #[test]
    fn braess_passes_every_suite() {
        let g = fixtures::braess();
        let zdd = Zdd::build(&g, &StrategyClass::from_designation(ClassKind::Paths, &g).unwrap()).unwrap();
        let report = run(&zdd, &g.lengths(), &Suite::ALL, 0).unwrap();
        assert_eq!(report.results.len(), 6);
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn oversized_families_are_refused() {
        let zdd = Zdd::build(&fixtures::complete(10), &StrategyClass::HamiltonianCycles).unwrap();
        assert!(matches!(run(&zdd, &[1.0; 45], &[Suite::Marginal], 0), Err(VerifyError::TooLarge(_))));
        assert!(run(&zdd, &[1.0; 45], &[Suite::Structure], 0).unwrap().all_pass());
    }
}
