//! Data-parallel execution of independent trials and per-instance analyses.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] fans work out
//! over the rayon pool; without it every mode runs sequentially. Each trial
//! owns an RNG stream derived from `(base_seed, index)`, so results are the
//! same in either mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::cloning::clone_feasible_pure;
use crate::error::Result;
use crate::matrixcore::ToleranceConfig;
use crate::random::{rng_from_seed, TrialRng};
use crate::states::StateFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// RNG for trial `index` of a sweep seeded with `base_seed`.
pub fn trial_rng(base_seed: u64, index: usize) -> TrialRng {
    let mut rng = rng_from_seed(base_seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs `count` independent trials, returning results in index order.
pub fn run_trials<R, F>(count: usize, base_seed: u64, exec: Execution, trial: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize, &mut TrialRng) -> R + Sync + Send,
{
    let one = |i: usize| trial(i, &mut trial_rng(base_seed, i));
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..count).into_par_iter().map(one).collect(),
        _ => (0..count).map(one).collect(),
    }
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Assisted-cloning verdicts for many `(ψ, α)` instances.
pub fn clone_verdicts(
    instances: &[(StateFamily, StateFamily)],
    exec: Execution,
    tol: &ToleranceConfig,
) -> Vec<Result<bool>> {
    map(instances, exec, |(psi, alpha)| {
        clone_feasible_pure(psi, alpha, tol).map(|v| v.is_feasible())
    })
}
