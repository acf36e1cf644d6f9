use serde::{Deserialize, Serialize};

use super::{exact_moments_with_cap, mc_moments, outcome_count, RiskReport, DEFAULT_OUTCOME_CAP};
use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::model::{capped_uniform, make_distribution, uniform, worst_case_w, DiscreteDistribution, Functional};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub cap: u128,
    /// Used only when enumeration is over the cap.
    pub replicates: u64,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { cap: DEFAULT_OUTCOME_CAP, replicates: 20_000, seed: 0 }
    }
}

/// Uniform, W, capped uniform, and two-level mixtures putting mass q on k
/// symbols and 1 - q on the rest. Duplicates are dropped.
pub fn candidate_family(support: usize, n: u64) -> Result<Vec<(String, DiscreteDistribution)>> {
    if support == 0 || n == 0 {
        return Err(Error::InvalidArgument("candidate family needs S >= 1 and n >= 1".into()));
    }
    let mut out: Vec<(String, DiscreteDistribution)> = vec![(format!("uniform:{support}"), uniform(support)?)];
    if n >= support as u64 {
        out.push((format!("w:{support}:{n}"), worst_case_w(support, n)?));
    }
    out.push((format!("capped:{support}:{n}"), capped_uniform(support, n)?));
    let mut ks: Vec<usize> = [1, support / 4, support / 2, 3 * support / 4, support.saturating_sub(1)]
        .into_iter()
        .filter(|&k| k >= 1 && k < support)
        .collect();
    ks.dedup();
    for k in ks {
        for q in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let heavy = q / k as f64;
            let light = (1.0 - q) / (support - k) as f64;
            let probs: Vec<f64> = (0..support).map(|i| if i < k { heavy } else { light }).collect();
            out.push((format!("two_level:k={k}:q={q}"), make_distribution(&probs)?));
        }
    }
    let mut unique: Vec<(String, DiscreteDistribution)> = Vec::with_capacity(out.len());
    for (tag, d) in out {
        if !unique.iter().any(|(_, u)| u == &d) {
            unique.push((tag, d));
        }
    }
    Ok(unique)
}

/// Largest MSE over [`candidate_family`]. A lower estimate of the worst case
/// over all distributions, not the supremum itself.
pub fn worst_case_search(
    est: &EstimatorSpec,
    func: &Functional,
    support: usize,
    n: u64,
) -> Result<(DiscreteDistribution, RiskReport)> {
    worst_case_search_with(est, func, support, n, SearchOptions::default()).map(|(_, d, r)| (d, r))
}

/// As [`worst_case_search`], also returning the winning candidate's tag.
pub fn worst_case_search_with(
    est: &EstimatorSpec,
    func: &Functional,
    support: usize,
    n: u64,
    opts: SearchOptions,
) -> Result<(String, DiscreteDistribution, RiskReport)> {
    let exact = outcome_count(support, n, opts.cap).is_some();
    let mut best: Option<(String, DiscreteDistribution, RiskReport)> = None;
    for (tag, dist) in candidate_family(support, n)? {
        let report = if exact {
            exact_moments_with_cap(est, func, &dist, n, opts.cap)?
        } else {
            mc_moments(est, func, &dist, n, opts.replicates, opts.seed)?
        };
        if best.as_ref().is_none_or(|(_, _, b)| report.mse > b.mse) {
            best = Some((tag, dist, report));
        }
    }
    best.ok_or(Error::EmptyVector)
}
