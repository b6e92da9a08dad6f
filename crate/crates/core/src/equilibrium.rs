//! Equilibrium computation: minimizing the potential over the convex hull
//! of a strategy family.
//!
//! Three solvers share one trace format:
//!
//! * [`solve_accelerated`]: the differentiable accelerated Frank–Wolfe
//!   method. Costs are accumulated with weights `α_t = t` at the averaged
//!   point `2/(t(t+1)) s_t`, the softmin marginal of the accumulated costs
//!   becomes the next iterate, and the output is the `α`-weighted average.
//!   [`solve_asymmetric`] is the multi-population form; the symmetric
//!   solver is its one-population, unit-mass case.
//! * [`solve_naive_softmin`]: classic Frank–Wolfe steps with the linear
//!   minimizer replaced by a softmin at scale `η₀ (t+1)`.
//! * [`solve_standard_fw`]: the non-differentiable baseline.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::congestion::{CostModel, ModelError};
use crate::marginals::{
    brute_force_marginal, softmin_marginal, weight_pushing_into, MarginalError, MarginalWorkspace,
};
use crate::scalar::{values, Scalar};
use crate::tape::TapeError;
use crate::zdd::{Zdd, ZddError};

pub const DEFAULT_ETA: f64 = 0.1;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EquilibriumError {
    #[error("invalid solver configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Marginal(#[from] MarginalError),
    #[error(transparent)]
    Zdd(#[from] ZddError),
    #[error(transparent)]
    Tape(#[from] TapeError),
}

/// Source of wall-clock readings for traces.
pub trait Clock {
    fn elapsed_ms(&self) -> f64;
}

/// Clock that always reads zero; keeps traces byte-for-byte reproducible.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Accelerated,
    NaiveSoftmin,
    StandardFw,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Number of iterations `T`.
    pub iterations: usize,
    /// Softmin scale `η` (accelerated) or `η₀` (naive schedule).
    pub eta: f64,
    pub variant: Variant,
    /// Keep a per-iteration record of the running average's potential.
    pub record_trace: bool,
    /// Evaluate the Frank–Wolfe gap at every iteration.
    pub record_gap: bool,
    /// Keep `c_t` and `x_t` of every iteration in the trace.
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            iterations: 300,
            eta: DEFAULT_ETA,
            variant: Variant::Accelerated,
            record_trace: true,
            record_gap: false,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn accelerated(iterations: usize, eta: f64) -> Self {
        Self { iterations, eta, ..Self::default() }
    }

    fn validate(&self) -> Result<(), EquilibriumError> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(EquilibriumError::Config("eta must be positive"));
        }
        if self.variant == Variant::Accelerated && self.iterations == 0 {
            return Err(EquilibriumError::Config("accelerated solver needs T >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    pub fw_gap: Option<f64>,
    pub potential: f64,
    pub wall_clock_ms: f64,
}

/// Accumulated costs and softmin iterate at one step of the accelerated
/// solver.
#[derive(Clone, Debug, PartialEq)]
pub struct IterateSnapshot {
    pub t: usize,
    pub cost: Vec<f64>,
    pub x: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EquilibriumTrace {
    pub records: Vec<IterationRecord>,
    pub iterates: Vec<IterateSnapshot>,
}

impl EquilibriumTrace {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// Potential recorded at iteration `t`.
    pub fn potential_at(&self, t: usize) -> Option<f64> {
        self.records.iter().find(|r| r.t == t).map(|r| r.potential)
    }
}

#[derive(Clone, Debug)]
pub struct Solution<S> {
    pub y: Vec<S>,
    pub trace: EquilibriumTrace,
}

#[derive(Clone, Debug)]
pub struct AsymmetricSolution<S> {
    pub y: Vec<S>,
    /// Final per-population softmin iterates `x_T^p`.
    pub population_x: Vec<Vec<S>>,
    pub trace: EquilibriumTrace,
}

/// A group of players sharing one strategy family.
#[derive(Clone, Copy, Debug)]
pub struct Population<'z> {
    pub zdd: &'z Zdd,
    pub mass: f64,
}

/// Frank–Wolfe gap `⟨∇f(y), y⟩ - min_S ⟨∇f(y), 1_S⟩`.
pub fn fw_gap(zdd: &Zdd, model: &CostModel, y: &[f64], theta: &[f64]) -> Result<f64, EquilibriumError> {
    fw_gap_populations(&[Population { zdd, mass: 1.0 }], model, y, theta)
}

/// Gap over the hull `{Σ_p m^p x^p}`.
pub fn fw_gap_populations(
    populations: &[Population<'_>],
    model: &CostModel,
    y: &[f64],
    theta: &[f64],
) -> Result<f64, EquilibriumError> {
    let grad = model.potential_gradient(y, theta)?;
    let inner: f64 = grad.iter().zip(y).map(|(g, v)| g * v).sum();
    let mut best = 0.0;
    for p in populations {
        best += p.mass * p.zdd.linear_min(&grad)?.0;
    }
    Ok(inner - best)
}

/// Accelerated differentiable solver on a single unit-mass population.
pub fn solve_accelerated<S: Scalar>(
    zdd: &Zdd,
    model: &CostModel,
    theta: &[S],
    config: &SolverConfig,
    clock: &dyn Clock,
) -> Result<Solution<S>, EquilibriumError> {
    let sol = solve_asymmetric(&[Population { zdd, mass: 1.0 }], model, theta, config, clock)?;
    Ok(Solution { y: sol.y, trace: sol.trace })
}

/// Accelerated solver for several populations, each with its own family
/// and mass.
pub fn solve_asymmetric<S: Scalar>(
    populations: &[Population<'_>],
    model: &CostModel,
    theta: &[S],
    config: &SolverConfig,
    clock: &dyn Clock,
) -> Result<AsymmetricSolution<S>, EquilibriumError> {
    config.validate()?;
    let n = check_problem(populations, model, theta)?;
    let anchor = theta[0];
    let zero = anchor.lift(0.0);
    let theta_values = values(theta);

    let softmin = |cost: &[S]| -> Result<(Vec<S>, Vec<Vec<S>>), EquilibriumError> {
        let mut total: Option<Vec<S>> = None;
        let mut parts = Vec::with_capacity(populations.len());
        for p in populations {
            let xp = if p.mass == 1.0 {
                softmin_marginal(p.zdd, cost)?
            } else {
                let scaled: Vec<S> = cost.iter().map(|&c| c * p.mass).collect();
                softmin_marginal(p.zdd, &scaled)?
            };
            let weighted: Vec<S> =
                if p.mass == 1.0 { xp.clone() } else { xp.iter().map(|&v| v * p.mass).collect() };
            total = Some(match total {
                None => weighted,
                Some(acc) => acc.iter().zip(&weighted).map(|(&a, &b)| a + b).collect(),
            });
            parts.push(xp);
        }
        Ok((total.expect("at least one population"), parts))
    };

    let mut cost: Vec<S> = vec![zero; n];
    let mut s: Vec<S> = vec![zero; n];
    let (x0, mut parts) = softmin(&cost)?;
    let mut x_prev2 = x0.clone();
    let mut x_prev1 = x0;
    let mut weighted_sum: Option<Vec<S>> = None;
    let mut trace = EquilibriumTrace::default();
    if config.record_iterates {
        trace.iterates.push(IterateSnapshot { t: 0, cost: vec![0.0; n], x: values(&x_prev1) });
    }

    let big_t = config.iterations;
    for t in 1..=big_t {
        let a_prev = (t - 1) as f64;
        let a_t = t as f64;
        // s_t = s_{t-1} - α_{t-1} x_{t-2} + (α_{t-1} + α_t) x_{t-1}
        s = (0..n)
            .map(|i| {
                if t == 1 {
                    // α_0 = 0 and s_0 = 0.
                    x_prev1[i] * a_t
                } else {
                    s[i] - x_prev2[i] * a_prev + x_prev1[i] * (a_prev + a_t)
                }
            })
            .collect();
        let scale = 2.0 / (a_t * (a_t + 1.0));
        let point: Vec<S> = s.iter().map(|&v| v * scale).collect();
        let grad = model.potential_gradient(&point, theta)?;
        cost = (0..n)
            .map(|i| {
                let step = grad[i] * (config.eta * a_t);
                if t == 1 {
                    step
                } else {
                    cost[i] + step
                }
            })
            .collect();
        let (x_t, p_t) = softmin(&cost)?;
        parts = p_t;
        weighted_sum = Some(match weighted_sum {
            None => x_t.iter().map(|&v| v * a_t).collect(),
            Some(acc) => acc.iter().zip(&x_t).map(|(&a, &v)| a + v * a_t).collect(),
        });
        if let Some(err) = x_t.iter().chain(&cost).find_map(|v| v.status().err()) {
            return Err(err.into());
        }

        if config.record_trace {
            let average: Vec<f64> =
                weighted_sum.as_ref().expect("set above").iter().map(|v| v.value() * scale).collect();
            record(&mut trace, populations, model, &average, &theta_values, t, config, clock)?;
        }
        if config.record_iterates {
            trace.iterates.push(IterateSnapshot { t, cost: values(&cost), x: values(&x_t) });
        }
        x_prev2 = core::mem::replace(&mut x_prev1, x_t);
    }

    let scale = 2.0 / (big_t as f64 * (big_t as f64 + 1.0));
    let y = weighted_sum.expect("T >= 1").into_iter().map(|v| v * scale).collect();
    Ok(AsymmetricSolution { y, population_x: parts, trace })
}

/// Allocation-free `f64` form of [`solve_accelerated`] for evaluating many
/// `θ` on one diagram. Produces bit-identical `y_T` and records no trace.
pub struct AcceleratedKernel<'z> {
    zdd: &'z Zdd,
    ws: MarginalWorkspace,
    cost: Vec<f64>,
    s: Vec<f64>,
    x_prev1: Vec<f64>,
    x_prev2: Vec<f64>,
    sum: Vec<f64>,
}

impl<'z> AcceleratedKernel<'z> {
    pub fn new(zdd: &'z Zdd) -> Self {
        let n = zdd.num_vars();
        Self {
            zdd,
            ws: MarginalWorkspace::for_zdd(zdd),
            cost: vec![0.0; n],
            s: vec![0.0; n],
            x_prev1: vec![0.0; n],
            x_prev2: vec![0.0; n],
            sum: vec![0.0; n],
        }
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(
        &mut self,
        model: &CostModel,
        theta: &[f64],
        iterations: usize,
        eta: f64,
    ) -> Result<&[f64], EquilibriumError> {
        SolverConfig::accelerated(iterations, eta).validate()?;
        let n = check_problem(&[Population { zdd: self.zdd, mass: 1.0 }], model, theta)?;
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        weight_pushing_into(self.zdd, &self.cost, &mut self.ws)?;
        self.x_prev1.copy_from_slice(&self.ws.x);
        self.x_prev2.copy_from_slice(&self.ws.x);
        for t in 1..=iterations {
            let a_prev = (t - 1) as f64;
            let a_t = t as f64;
            let scale = 2.0 / (a_t * (a_t + 1.0));
            for i in 0..n {
                self.s[i] = if t == 1 {
                    self.x_prev1[i] * a_t
                } else {
                    self.s[i] - self.x_prev2[i] * a_prev + self.x_prev1[i] * (a_prev + a_t)
                };
                let grad = model.edge_cost(i, self.s[i] * scale, theta[i])?;
                let step = grad * (eta * a_t);
                self.cost[i] = if t == 1 { step } else { self.cost[i] + step };
            }
            weight_pushing_into(self.zdd, &self.cost, &mut self.ws)?;
            for i in 0..n {
                let x = self.ws.x[i];
                self.sum[i] = if t == 1 { x * a_t } else { self.sum[i] + x * a_t };
            }
            core::mem::swap(&mut self.x_prev2, &mut self.x_prev1);
            self.x_prev1.copy_from_slice(&self.ws.x);
        }
        let big_t = iterations as f64;
        let scale = 2.0 / (big_t * (big_t + 1.0));
        for v in self.sum.iter_mut() {
            *v *= scale;
        }
        Ok(&self.sum)
    }
}

/// Frank–Wolfe with a softmin direction `μ(η₀ (t+1) ∇f(x_t))` and step
/// `2/(t+2)`. Differentiable; `T = 0` returns `μ(0)`.
pub fn solve_naive_softmin<S: Scalar>(
    zdd: &Zdd,
    model: &CostModel,
    theta: &[S],
    config: &SolverConfig,
    clock: &dyn Clock,
) -> Result<Solution<S>, EquilibriumError> {
    config.validate()?;
    let populations = [Population { zdd, mass: 1.0 }];
    let n = check_problem(&populations, model, theta)?;
    let zero = theta[0].lift(0.0);
    let theta_values = values(theta);
    let mut x = softmin_marginal(zdd, &vec![zero; n])?;
    let mut trace = EquilibriumTrace::default();
    record(&mut trace, &populations, model, &values(&x), &theta_values, 0, config, clock)?;
    for t in 0..config.iterations {
        let grad = model.potential_gradient(&x, theta)?;
        let scale = config.eta * (t + 1) as f64;
        let cost: Vec<S> = grad.iter().map(|&g| g * scale).collect();
        let dir = softmin_marginal(zdd, &cost)?;
        let gamma = 2.0 / (t as f64 + 2.0);
        x = x.iter().zip(&dir).map(|(&a, &b)| a * (1.0 - gamma) + b * gamma).collect();
        if let Some(err) = x.iter().find_map(|v| v.status().err()) {
            return Err(err.into());
        }
        record(&mut trace, &populations, model, &values(&x), &theta_values, t + 1, config, clock)?;
    }
    Ok(Solution { y: x, trace })
}

/// Classic Frank–Wolfe from the vertex of the lexicographically smallest
/// member, with step `2/(t+2)`. Not differentiable.
pub fn solve_standard_fw(
    zdd: &Zdd,
    model: &CostModel,
    theta: &[f64],
    config: &SolverConfig,
    clock: &dyn Clock,
) -> Result<Solution<f64>, EquilibriumError> {
    if !(config.eta > 0.0 && config.eta.is_finite()) {
        return Err(EquilibriumError::Config("eta must be positive"));
    }
    let populations = [Population { zdd, mass: 1.0 }];
    let n = check_problem(&populations, model, theta)?;
    let (_, start) = zdd.linear_min(&vec![0.0; n])?;
    let mut x = indicator(n, &start);
    let mut trace = EquilibriumTrace::default();
    record(&mut trace, &populations, model, &x, theta, 0, config, clock)?;
    for t in 0..config.iterations {
        let grad = model.potential_gradient(&x, theta)?;
        let (_, vertex) = zdd.linear_min(&grad)?;
        let s = indicator(n, &vertex);
        let gamma = 2.0 / (t as f64 + 2.0);
        for i in 0..n {
            x[i] = (1.0 - gamma) * x[i] + gamma * s[i];
        }
        record(&mut trace, &populations, model, &x, theta, t + 1, config, clock)?;
    }
    Ok(Solution { y: x, trace })
}

/// `‖x_t - μ_S(c_t)‖_∞` with the marginal computed by explicit
/// enumeration of the family: the iterate must be the marginal of the
/// exponential-weights distribution over members.
pub fn exponential_weights_error(
    zdd: &Zdd,
    cost: &[f64],
    x: &[f64],
    limit: usize,
) -> Result<f64, EquilibriumError> {
    let family = zdd.enumerate(limit)?;
    let reference = brute_force_marginal(&family, cost)?;
    Ok(reference.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

pub const EXPONENTIAL_WEIGHTS_TOLERANCE: f64 = 1e-8;

/// Whether snapshot `t` of `trace` passes the exponential-weights check.
pub fn exponential_weights_check(
    zdd: &Zdd,
    trace: &EquilibriumTrace,
    t: usize,
    limit: usize,
) -> Result<bool, EquilibriumError> {
    let snap = trace
        .iterates
        .iter()
        .find(|s| s.t == t)
        .ok_or(EquilibriumError::Config("iterate was not recorded"))?;
    Ok(exponential_weights_error(zdd, &snap.cost, &snap.x, limit)? <= EXPONENTIAL_WEIGHTS_TOLERANCE)
}

pub fn indicator(n: usize, set: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &i in set {
        v[i] = 1.0;
    }
    v
}

fn check_problem<S: Scalar>(
    populations: &[Population<'_>],
    model: &CostModel,
    theta: &[S],
) -> Result<usize, EquilibriumError> {
    let n = model.len();
    if populations.is_empty() {
        return Err(EquilibriumError::Config("need at least one population"));
    }
    if n == 0 || theta.len() != n {
        return Err(ModelError::Dimension { expected: n, got: theta.len() }.into());
    }
    for p in populations {
        if !(p.mass > 0.0 && p.mass.is_finite()) {
            return Err(EquilibriumError::Config("population mass must be positive"));
        }
        if p.zdd.num_vars() != n {
            return Err(ZddError::Dimension { expected: n, got: p.zdd.num_vars() }.into());
        }
        if p.zdd.is_empty_family() {
            return Err(MarginalError::EmptyFamily.into());
        }
    }
    Ok(n)
}

#[allow(clippy::too_many_arguments)]
fn record(
    trace: &mut EquilibriumTrace,
    populations: &[Population<'_>],
    model: &CostModel,
    y: &[f64],
    theta: &[f64],
    t: usize,
    config: &SolverConfig,
    clock: &dyn Clock,
) -> Result<(), EquilibriumError> {
    if !config.record_trace {
        return Ok(());
    }
    let fw_gap =
        if config.record_gap { Some(fw_gap_populations(populations, model, y, theta)?) } else { None };
    trace.records.push(IterationRecord {
        t,
        fw_gap,
        potential: model.potential_value(y, theta)?,
        wall_clock_ms: clock.elapsed_ms(),
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congestion::CostKind;
    use crate::zdd::{fixtures, StrategyClass};

    fn braess() -> Zdd {
        Zdd::build(&fixtures::braess(), &StrategyClass::SimplePaths { source: 0, target: 3 }).unwrap()
    }

    fn frac() -> CostModel {
        CostModel::uniform(CostKind::Fractional, 5)
    }

    #[test]
    fn one_iteration_unrolls() {
        let z = braess();
        let theta = [1.0; 5];
        let sol =
            solve_accelerated(&z, &frac(), &theta, &SolverConfig::accelerated(1, 0.1), &NoClock).unwrap();
        let x0 = softmin_marginal(&z, &[0.0; 5]).unwrap();
        let g = frac().potential_gradient(&x0, &theta).unwrap();
        let c1: Vec<f64> = g.iter().map(|v| v * 0.1).collect();
        let x1 = softmin_marginal(&z, &c1).unwrap();
        for (a, b) in sol.y.iter().zip(&x1) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_matches_generic_solver_bitwise() {
        let z = braess();
        let mut kernel = AcceleratedKernel::new(&z);
        for kind in [CostKind::Fractional, CostKind::Exponential] {
            let model = CostModel::uniform(kind, 5);
            for theta in [[1.0; 5], [0.0, 2.5, 0.0, 0.0, 2.5], [0.3, 1.7, 2.0, 0.9, 0.1]] {
                for t in [1, 2, 37] {
                    let cfg = SolverConfig::accelerated(t, 0.1);
                    let generic = solve_accelerated(&z, &model, &theta, &cfg, &NoClock).unwrap();
                    let fast = kernel.solve(&model, &theta, t, 0.1).unwrap();
                    assert_eq!(fast, generic.y.as_slice());
                }
            }
        }
    }

    #[test]
    fn gap_examples() {
        let z = braess();
        let eq = [0.5, 0.5, 0.0, 0.5, 0.5];
        assert!(fw_gap(&z, &frac(), &eq, &[1.0; 5]).unwrap().abs() <= 1e-10);
        let on_one = [1.0, 0.0, 0.0, 1.0, 0.0];
        // Loaded path costs 2 (1 + 10/2) = 12 at θ = 1 and 2 (1 + 10) = 22 at
        // θ = 0, against 2 for the empty alternative path.
        assert!((fw_gap(&z, &frac(), &on_one, &[1.0; 5]).unwrap() - 10.0).abs() < 1e-12);
        assert!((fw_gap(&z, &frac(), &on_one, &[0.0; 5]).unwrap() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn standard_fw_initial_vertex() {
        let z = braess();
        let cfg = SolverConfig { iterations: 0, variant: Variant::StandardFw, ..SolverConfig::default() };
        let sol = solve_standard_fw(&z, &frac(), &[1.0; 5], &cfg, &NoClock).unwrap();
        // Lexicographically smallest member is {1,3,5}.
        assert_eq!(sol.y, vec![1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn naive_zero_iterations_is_uniform_marginal() {
        let z = braess();
        let cfg = SolverConfig {
            iterations: 0,
            eta: 1.0,
            variant: Variant::NaiveSoftmin,
            ..SolverConfig::default()
        };
        let sol = solve_naive_softmin(&z, &frac(), &[1.0; 5], &cfg, &NoClock).unwrap();
        assert!(sol.y.iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn zero_iterations_rejected_for_accelerated() {
        let z = braess();
        let err = solve_accelerated(&z, &frac(), &[1.0; 5], &SolverConfig::accelerated(0, 0.1), &NoClock);
        assert!(matches!(err, Err(EquilibriumError::Config(_))));
    }

    #[test]
    fn theta_domain_error_propagates() {
        let z = braess();
        let theta = [1.0, 1.0, -1.5, 1.0, 1.0];
        let err = solve_accelerated(&z, &frac(), &theta, &SolverConfig::accelerated(3, 0.1), &NoClock);
        assert!(matches!(err, Err(EquilibriumError::Model(ModelError::ThetaDomain { .. }))));
    }
}
