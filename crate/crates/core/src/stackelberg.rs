//! The leader's problem: choose capacities `θ` on the scaled simplex
//! `Θ = {θ ≥ 0, Σθ = n}` to minimize the social cost at equilibrium.
//!
//! Gradients come from differentiating the social cost through the whole
//! accelerated solve on a fresh tape.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::congestion::{CostModel, ModelError};
use crate::equilibrium::{
    solve_accelerated, AcceleratedKernel, Clock, EquilibriumError, NoClock, SolverConfig,
};
use crate::tape::{Tape, TapeError};
use crate::zdd::Zdd;

pub const DEFAULT_OUTER_STEP: f64 = 5.0;
pub const DEFAULT_HEURISTIC_DELTA: f64 = 1.0;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum StackelbergError {
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("gradient step produced a non-finite θ at iteration {iteration} (entry {index})")]
    NonFiniteStep { iteration: usize, index: usize },
    #[error("θ is not in the feasible set: {0}")]
    Infeasible(&'static str),
    #[error("grid has {points} points, more than the limit {limit}")]
    GridTooLarge { points: u128, limit: u128 },
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Budget {
    pub max_outer_iters: usize,
    /// Stop once the clock passes this many milliseconds.
    pub wall_clock_limit_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StackelbergConfig {
    pub outer_step: f64,
    pub inner: SolverConfig,
    pub budget: Budget,
    pub heuristic_delta: f64,
    pub seed: u64,
    /// PGD stops once a step moves `θ` by at most this much (∞-norm). The
    /// default 0 stops only at exact fixed points; a positive value such
    /// as `1e-8` also stops at symmetric saddles, which PGD otherwise
    /// leaves as rounding asymmetries grow.
    pub stall_tolerance: f64,
}

impl Default for StackelbergConfig {
    fn default() -> Self {
        Self {
            outer_step: DEFAULT_OUTER_STEP,
            inner: SolverConfig::default(),
            budget: Budget { max_outer_iters: 30, wall_clock_limit_ms: None },
            heuristic_delta: DEFAULT_HEURISTIC_DELTA,
            seed: 0,
            stall_tolerance: 0.0,
        }
    }
}

impl StackelbergConfig {
    fn validate(&self) -> Result<(), StackelbergError> {
        if !(self.outer_step > 0.0 && self.outer_step.is_finite()) {
            return Err(StackelbergError::Config("outer step must be positive"));
        }
        if !(self.heuristic_delta > 0.0 && self.heuristic_delta.is_finite()) {
            return Err(StackelbergError::Config("heuristic delta must be positive"));
        }
        if self.stall_tolerance.is_nan() || self.stall_tolerance < 0.0 {
            return Err(StackelbergError::Config("stall tolerance must be non-negative"));
        }
        if self.budget.max_outer_iters == 0 {
            return Err(StackelbergError::Config("budget must allow an iteration"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OuterRecord {
    pub k: usize,
    pub theta: Vec<f64>,
    pub social_cost: f64,
    pub wall_clock_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OptimizationTrace {
    pub records: Vec<OuterRecord>,
}

impl OptimizationTrace {
    pub fn last(&self) -> Option<&OuterRecord> {
        self.records.last()
    }

    /// Record with the lowest social cost (earliest on ties).
    pub fn best(&self) -> Option<&OuterRecord> {
        self.records.iter().fold(None, |best: Option<&OuterRecord>, r| match best {
            Some(b) if b.social_cost <= r.social_cost => Some(b),
            _ => Some(r),
        })
    }
}

/// Euclidean projection onto `{θ ≥ 0, Σθ = radius}`.
pub fn project_onto_simplex(v: &[f64], radius: f64) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - radius) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Projection onto `Θ`, whose radius is the dimension.
pub fn project_theta(v: &[f64]) -> Vec<f64> {
    project_onto_simplex(v, v.len() as f64)
}

pub fn check_feasible(theta: &[f64]) -> Result<(), StackelbergError> {
    if theta.iter().any(|&t| !t.is_finite() || t < -1e-12) {
        return Err(StackelbergError::Infeasible("negative or non-finite entry"));
    }
    let sum: f64 = theta.iter().sum();
    if (sum - theta.len() as f64).abs() > 1e-9 {
        return Err(StackelbergError::Infeasible("entries do not sum to n"));
    }
    Ok(())
}

/// Removes the mean, giving the component tangent to `Σθ = const`.
pub fn tangential(g: &[f64]) -> Vec<f64> {
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    g.iter().map(|v| v - mean).collect()
}

/// Social cost at the approximate equilibrium, without recording.
pub fn social_cost_at(
    theta: &[f64],
    zdd: &Zdd,
    model: &CostModel,
    inner: &SolverConfig,
) -> Result<f64, StackelbergError> {
    let (f, _) = social_cost_and_flow(theta, zdd, model, inner)?;
    Ok(f)
}

pub fn social_cost_and_flow(
    theta: &[f64],
    zdd: &Zdd,
    model: &CostModel,
    inner: &SolverConfig,
) -> Result<(f64, Vec<f64>), StackelbergError> {
    let sol = solve_accelerated(zdd, model, theta, inner, &NoClock)?;
    let f = model.social_cost(theta, &sol.y)?;
    Ok((f, sol.y))
}

/// `(F(θ, y_T(θ)), ∇F(θ, y_T(θ)))` by reverse-mode differentiation through
/// the solver.
pub fn outer_gradient(
    theta: &[f64],
    zdd: &Zdd,
    model: &CostModel,
    inner: &SolverConfig,
) -> Result<(f64, Vec<f64>), StackelbergError> {
    let tape = Tape::new();
    let vars = theta.iter().map(|&t| tape.input(t)).collect::<Result<Vec<_>, _>>()?;
    let sol = solve_accelerated(zdd, model, &vars, inner, &NoClock)?;
    let f = model.social_cost(&vars, &sol.y)?;
    let grad = tape.backward(f)?;
    Ok((f.value(), grad))
}

/// Projected gradient descent on the leader's objective.
pub fn optimize_pgd(
    start: &[f64],
    zdd: &Zdd,
    model: &CostModel,
    config: &StackelbergConfig,
    clock: &dyn Clock,
) -> Result<OptimizationTrace, StackelbergError> {
    config.validate()?;
    check_feasible(start)?;
    let mut theta = start.to_vec();
    let mut trace = OptimizationTrace::default();
    for k in 0..=config.budget.max_outer_iters {
        let (f, grad) = outer_gradient(&theta, zdd, model, &config.inner)?;
        trace.records.push(OuterRecord {
            k,
            theta: theta.clone(),
            social_cost: f,
            wall_clock_ms: clock.elapsed_ms(),
        });
        if k == config.budget.max_outer_iters || over_time(config, clock) {
            break;
        }
        let stepped: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t - config.outer_step * g).collect();
        if let Some(index) = stepped.iter().position(|v| !v.is_finite()) {
            return Err(StackelbergError::NonFiniteStep { iteration: k, index });
        }
        let next = project_theta(&stepped);
        let moved = next.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        theta = next;
        if moved <= config.stall_tolerance {
            let f = social_cost_at(&theta, zdd, model, &config.inner)?;
            trace.records.push(OuterRecord {
                k: k + 1,
                theta: theta.clone(),
                social_cost: f,
                wall_clock_ms: clock.elapsed_ms(),
            });
            break;
        }
    }
    Ok(trace)
}

/// Uniform draw from `Θ`: Dirichlet(1, …, 1) scaled by `n`.
pub fn random_theta(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            -libm::log(1.0 - u)
        })
        .collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|d| d * n as f64 / total).collect()
}

/// Flow-following heuristic: shift capacity toward edges carrying more
/// than the average flow; restart at a random point of `Θ` whenever the
/// social cost fails to decrease.
pub fn baseline_heuristic(
    start: &[f64],
    zdd: &Zdd,
    model: &CostModel,
    config: &StackelbergConfig,
    clock: &dyn Clock,
) -> Result<OptimizationTrace, StackelbergError> {
    config.validate()?;
    check_feasible(start)?;
    let n = start.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut theta = start.to_vec();
    let (mut f, mut y) = social_cost_and_flow(&theta, zdd, model, &config.inner)?;
    let mut trace = OptimizationTrace::default();
    trace.records.push(OuterRecord {
        k: 0,
        theta: theta.clone(),
        social_cost: f,
        wall_clock_ms: clock.elapsed_ms(),
    });
    for k in 1..=config.budget.max_outer_iters {
        if over_time(config, clock) {
            break;
        }
        let candidate = heuristic_step(&theta, &y, config.heuristic_delta);
        let (fc, yc) = social_cost_and_flow(&candidate, zdd, model, &config.inner)?;
        if fc < f {
            theta = candidate;
            f = fc;
            y = yc;
        } else {
            theta = random_theta(n, &mut rng);
            let (fr, yr) = social_cost_and_flow(&theta, zdd, model, &config.inner)?;
            f = fr;
            y = yr;
        }
        trace.records.push(OuterRecord {
            k,
            theta: theta.clone(),
            social_cost: f,
            wall_clock_ms: clock.elapsed_ms(),
        });
    }
    Ok(trace)
}

/// `project(θ + δ (y - ȳ 1))`.
pub fn heuristic_step(theta: &[f64], y: &[f64], delta: f64) -> Vec<f64> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let moved: Vec<f64> = theta.iter().zip(y).map(|(t, v)| t + delta * (v - mean)).collect();
    project_theta(&moved)
}

fn over_time(config: &StackelbergConfig, clock: &dyn Clock) -> bool {
    config.budget.wall_clock_limit_ms.is_some_and(|limit| clock.elapsed_ms() >= limit)
}

/// The points `{θ ∈ Θ : θ_i ∈ step·ℤ}`, enumerated as compositions of
/// `n / step` into `n` non-negative parts in lexicographic order.
#[derive(Clone, Debug)]
pub struct SimplexGrid {
    n: usize,
    units: usize,
    step: f64,
}

impl SimplexGrid {
    pub fn new(n: usize, step: f64) -> Result<Self, StackelbergError> {
        if n == 0 {
            return Err(StackelbergError::Config("empty ground set"));
        }
        if !(step > 0.0 && step.is_finite()) {
            return Err(StackelbergError::Config("grid step must be positive"));
        }
        let ratio = n as f64 / step;
        let units = libm::round(ratio);
        if (ratio - units).abs() > 1e-9 * ratio.max(1.0) {
            return Err(StackelbergError::Config("n must be a multiple of the grid step"));
        }
        Ok(Self { n, units: units as usize, step })
    }

    /// Number of grid points, `C(units + n - 1, n - 1)`.
    pub fn len(&self) -> u128 {
        let k = (self.n - 1) as u128;
        let total = self.units as u128 + k;
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc.saturating_mul(total - i) / (i + 1);
        }
        acc
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.slice_count()).flat_map(move |k| self.slice(k))
    }

    /// Slices group the points by their first coordinate, in increasing
    /// order, so searching slice by slice visits the grid in `iter` order.
    pub fn slice_count(&self) -> usize {
        if self.n == 1 {
            1
        } else {
            self.units + 1
        }
    }

    pub fn slice(&self, k: usize) -> impl Iterator<Item = Vec<f64>> + '_ {
        let (first, rest) = if self.n == 1 { (self.units, 0) } else { (k, self.n - 1) };
        let tail = if rest == 0 { None } else { Some(Compositions::new(rest, self.units - first)) };
        let single = if rest == 0 { Some(Vec::new()) } else { None };
        tail.into_iter().flatten().chain(single).map(move |parts| {
            let mut theta = Vec::with_capacity(self.n);
            theta.push(first as f64 * self.step);
            theta.extend(parts.iter().map(|&p| p as f64 * self.step));
            theta
        })
    }
}

struct Compositions {
    current: Option<Vec<usize>>,
    total: usize,
}

impl Compositions {
    fn new(n: usize, total: usize) -> Self {
        let mut first = vec![0; n];
        first[n - 1] = total;
        Self { current: Some(first), total }
    }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let n = out.len();
        // Next in lexicographic order: bump the rightmost position that can
        // grow (any but the last) and put the remainder in the last slot.
        let mut next = out.clone();
        let mut i = n.checked_sub(2);
        while let Some(j) = i {
            let prefix: usize = next[..=j].iter().sum();
            if prefix < self.total {
                next[j] += 1;
                for slot in next.iter_mut().skip(j + 1) {
                    *slot = 0;
                }
                let used: usize = next[..n - 1].iter().sum();
                next[n - 1] = self.total - used;
                self.current = Some(next);
                break;
            }
            i = j.checked_sub(1);
        }
        Some(out)
    }
}

/// Tie-aware comparison used by grid search: lower cost wins, and costs
/// within `tie` of each other fall back to lexicographic order of `θ`.
pub fn better_candidate(a: (&[f64], f64), b: (&[f64], f64), tie: f64) -> bool {
    if (a.1 - b.1).abs() > tie {
        return a.1 < b.1;
    }
    a.0.iter().zip(b.0).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y)
}

/// Relative width of the band within which grid costs count as equal.
pub const GRID_TIE_TOLERANCE: f64 = 1e-9;

/// Best grid point seen so far, with its social cost.
pub type GridBest = Option<(Vec<f64>, f64)>;

/// Folds `candidate` into `best` with the grid tie rule.
pub fn merge_best(best: GridBest, candidate: (Vec<f64>, f64)) -> GridBest {
    match best {
        Some((bt, bf))
            if !better_candidate((&candidate.0, candidate.1), (&bt, bf), GRID_TIE_TOLERANCE * bf.abs()) =>
        {
            Some((bt, bf))
        }
        _ => Some(candidate),
    }
}

/// Sizes the grid and refuses it if it has more than `max_points` points.
pub fn plan_grid(n: usize, step: f64, max_points: u128) -> Result<SimplexGrid, StackelbergError> {
    let grid = SimplexGrid::new(n, step)?;
    if grid.len() > max_points {
        return Err(StackelbergError::GridTooLarge { points: grid.len(), limit: max_points });
    }
    Ok(grid)
}

/// Best point of slice `k`, visiting points in lexicographic order.
pub fn search_slice(
    grid: &SimplexGrid,
    k: usize,
    kernel: &mut AcceleratedKernel<'_>,
    model: &CostModel,
    inner: &SolverConfig,
) -> Result<GridBest, StackelbergError> {
    let mut best = None;
    for theta in grid.slice(k) {
        let y = kernel.solve(model, &theta, inner.iterations, inner.eta)?;
        let f = model.social_cost(&theta, y)?;
        best = merge_best(best, (theta, f));
    }
    Ok(best)
}

/// Exhaustive search over the grid of `Θ` with spacing `step`. The best
/// point of each slice is found first and the slice winners are then
/// merged in slice order, so a parallel driver that searches slices
/// independently returns the same point.
pub fn exhaustive_search(
    step: f64,
    zdd: &Zdd,
    model: &CostModel,
    inner: &SolverConfig,
    max_points: u128,
) -> Result<(Vec<f64>, f64), StackelbergError> {
    let grid = plan_grid(model.len(), step, max_points)?;
    let mut kernel = AcceleratedKernel::new(zdd);
    let mut best = None;
    for k in 0..grid.slice_count() {
        if let Some(winner) = search_slice(&grid, k, &mut kernel, model, inner)? {
            best = merge_best(best, winner);
        }
    }
    Ok(best.expect("grid is non-empty"))
}
