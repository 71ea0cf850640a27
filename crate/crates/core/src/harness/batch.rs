//! Seeded Monte-Carlo batches.

use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::scenario::{simulate, RunSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub trial: usize,
    pub seed: u64,
    pub message: String,
}

/// Median and maximum of the settled `φ` band over successful trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchAggregate {
    pub trials: usize,
    pub median_settled_phi: f64,
    pub max_settled_phi: f64,
    pub median_final_omega: f64,
    pub max_final_omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchReport {
    /// Successful trials in trial order.
    pub summaries: Vec<RunSummary>,
    pub failures: Vec<TrialFailure>,
    pub aggregate: Option<BatchAggregate>,
}

pub fn trial_seed(cfg: &ScenarioConfig, trial: usize) -> u64 {
    cfg.run.seed.wrapping_add(cfg.run.seed_stride.wrapping_mul(trial as u64))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

pub fn aggregate(summaries: &[RunSummary]) -> Option<BatchAggregate> {
    if summaries.is_empty() {
        return None;
    }
    let settled: Vec<f64> = summaries.iter().map(|s| s.settled_phi).collect();
    let omega: Vec<f64> = summaries.iter().map(|s| s.final_omega).collect();
    Some(BatchAggregate {
        trials: summaries.len(),
        median_settled_phi: median(&settled),
        max_settled_phi: settled.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        median_final_omega: median(&omega),
        max_final_omega: omega.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Runs `trials` independent scenarios in parallel. A failing trial is
/// recorded and the rest continue.
pub fn run_batch(cfg: &ScenarioConfig, trials: usize) -> BatchReport {
    let results: Vec<_> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(cfg, trial);
            simulate(cfg, seed).map(|o| o.summary).map_err(|e| TrialFailure { trial, seed, message: e.to_string() })
        })
        .collect();
    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(s) => summaries.push(s),
            Err(f) => failures.push(f),
        }
    }
    let aggregate = aggregate(&summaries);
    BatchReport { summaries, failures, aggregate }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn seeds_follow_stride() {
        let mut cfg = ScenarioConfig::default();
        cfg.run.seed = 100;
        cfg.run.seed_stride = 7;
        assert_eq!(trial_seed(&cfg, 0), 100);
        assert_eq!(trial_seed(&cfg, 3), 121);
    }

    #[test]
    fn single_trial_matches_run() {
        let mut cfg = ScenarioConfig::default();
        cfg.time.duration = 1.0;
        let report = run_batch(&cfg, 1);
        let direct = simulate(&cfg, cfg.run.seed).unwrap().summary;
        assert_eq!(report.summaries.len(), 1);
        let s = report.summaries[0];
        assert_eq!(
            (s.final_phi, s.settled_phi, s.final_omega),
            (direct.final_phi, direct.settled_phi, direct.final_omega)
        );
    }
}
