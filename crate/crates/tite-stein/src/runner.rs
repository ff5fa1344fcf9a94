//! Parallel replication of simulated trials.
//!
//! Replication `i` always draws from stream `i` of the seed, so results do
//! not depend on how many worker threads run them.

use rayon::prelude::*;
use tite_stein_core::sim::{replication_rng, run_trial, summarize_results, SimOptions};
use tite_stein_core::{compute_boundaries, AccrualModel, ConfigError, DesignParams, OperatingCharacteristics, Scenario, TrialResult};

pub const THREADS_ENV: &str = "TITE_STEIN_THREADS";

/// Thread cap from the environment; `None` lets rayon decide.
pub fn env_threads() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|n| *n > 0)
}

pub fn run_replications(
    params: &DesignParams,
    scenario: &Scenario,
    accrual: &AccrualModel,
    options: &SimOptions,
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<Vec<TrialResult>, ConfigError> {
    if reps == 0 {
        return Err(ConfigError::new("reps", "must be at least 1"));
    }
    params.validate()?;
    compute_boundaries(params)?;
    scenario.validate(params)?;
    accrual.validate()?;
    let work = || {
        (0..reps)
            .into_par_iter()
            .map(|i| run_trial(params, scenario, accrual, options, &mut replication_rng(seed, i as u64)))
            .collect::<Result<Vec<_>, _>>()
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(work),
        None => work(),
    }
}

pub fn simulate(
    params: &DesignParams,
    scenario: &Scenario,
    accrual: &AccrualModel,
    reps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<OperatingCharacteristics, ConfigError> {
    let options = SimOptions {
        keep_trace: false,
        ..SimOptions::default()
    };
    let results = run_replications(params, scenario, accrual, &options, reps, seed, threads)?;
    Ok(summarize_results(&results, Some(scenario)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tite_stein_core::presets;

    #[test]
    fn matches_sequential_driver() {
        let p = presets::standard_design();
        let s = presets::scenario(2).unwrap();
        let a = presets::standard_accrual();
        let par = simulate(&p, &s, &a, 20, 5, Some(2)).unwrap();
        let seq = tite_stein_core::sim::operating_characteristics(&p, &s, &a, &SimOptions::default(), 20, 5).unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn zero_reps_rejected() {
        let p = presets::standard_design();
        let err = simulate(&p, &presets::scenario(1).unwrap(), &presets::standard_accrual(), 0, 1, None).unwrap_err();
        assert_eq!(err.field, "reps");
    }
}
