//! Exhaustive grid search over `Θ`, one rayon task per grid slice.

use ccg_core::congestion::CostModel;
use ccg_core::equilibrium::{AcceleratedKernel, SolverConfig};
use ccg_core::stackelberg::{merge_best, plan_grid, search_slice, StackelbergError};
use ccg_core::zdd::Zdd;
use rayon::prelude::*;

/// Same result as [`ccg_core::stackelberg::exhaustive_search`] for any
/// number of threads: slice winners are merged in slice order.
pub fn parallel_exhaustive_search(
    step: f64,
    zdd: &Zdd,
    model: &CostModel,
    inner: &SolverConfig,
    max_points: u128,
    jobs: usize,
) -> Result<(Vec<f64>, f64), StackelbergError> {
    let grid = plan_grid(model.len(), step, max_points)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|_| StackelbergError::Config("could not start worker threads"))?;
    let winners: Vec<_> = pool.install(|| {
        (0..grid.slice_count())
            .into_par_iter()
            .map_init(
                || AcceleratedKernel::new(zdd),
                |kernel, k| search_slice(&grid, k, kernel, model, inner),
            )
            .collect::<Result<Vec<_>, _>>()
    })?;
    let best = winners.into_iter().flatten().fold(None, merge_best);
    Ok(best.expect("grid is non-empty"))
}
