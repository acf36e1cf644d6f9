use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    exact_moments_with_cap, hash64, hybrid_moments, mc_moments, outcome_count, search::worst_case_search_with,
    RiskReport, SearchOptions, DEFAULT_OUTCOME_CAP,
};
use crate::bounds::{lower_risk, minimax_reference, mle_rate_reference, upper_risk, LowerParams};
use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::model::{capped_uniform, uniform, worst_case_w, DiscreteDistribution, Functional};

/// Bumped whenever [`SweepRecord`] columns change.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    /// Enumeration when under the cap, otherwise exact bias with sampled variance.
    Auto,
    Exact,
    Bernstein,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepEstimator {
    Mle,
    MillerMadow,
}

impl SweepEstimator {
    fn spec(self, support: usize) -> EstimatorSpec {
        match self {
            SweepEstimator::Mle => EstimatorSpec::PlugIn,
            SweepEstimator::MillerMadow => EstimatorSpec::MillerMadow { support },
        }
    }
}

/// Alphabet size for a grid row: a fixed value or tied to the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportSpec {
    Fixed(usize),
    SameAsN,
}

impl SupportSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t == "n" {
            return Ok(SupportSpec::SameAsN);
        }
        t.parse::<usize>()
            .ok()
            .filter(|&s| s >= 1)
            .map(SupportSpec::Fixed)
            .ok_or_else(|| Error::Parse(format!("bad alphabet size '{t}' (expected a positive integer or 'n')")))
    }

    fn resolve(self, n: u64) -> usize {
        match self {
            SupportSpec::Fixed(s) => s,
            SupportSpec::SameAsN => n as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Functional specs such as "entropy" or "power:0.5".
    pub functionals: Vec<String>,
    pub estimators: Vec<SweepEstimator>,
    pub supports: Vec<SupportSpec>,
    pub ns: Vec<u64>,
    /// Distribution tags: uniform, w, capped, worst (candidate search).
    pub distributions: Vec<String>,
    pub method: SweepMethod,
    pub replicates: u64,
    pub seed: u64,
    pub cap: u128,
    pub c_minimax: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            functionals: vec!["entropy".into()],
            estimators: vec![SweepEstimator::Mle],
            supports: Vec::new(),
            ns: Vec::new(),
            distributions: vec!["uniform".into()],
            method: SweepMethod::Auto,
            replicates: 10_000,
            seed: 0,
            cap: DEFAULT_OUTCOME_CAP,
            c_minimax: None,
        }
    }
}

/// One grid point: empirical risk joined with the bound values.
/// Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub schema_version: u32,
    pub functional: String,
    pub alpha: Option<f64>,
    pub estimator: String,
    pub distribution: String,
    pub s: usize,
    pub n: u64,
    pub method: String,
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
    pub truth: Option<f64>,
    pub bias: Option<f64>,
    pub variance: Option<f64>,
    pub mse: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub upper_bias: Option<f64>,
    pub upper_variance: Option<f64>,
    pub upper_total: Option<f64>,
    pub lower_total: Option<f64>,
    pub lower_valid: Option<bool>,
    pub minimax_rate: Option<f64>,
    pub mle_rate: Option<f64>,
    /// ln n / ln S needed for consistency: 1/α below one, 0 above, 1 for entropy.
    pub phase_boundary: Option<f64>,
    pub log_n_over_log_s: Option<f64>,
    pub error: Option<String>,
}

pub fn phase_boundary(func: &Functional) -> Option<f64> {
    match func {
        Functional::Entropy => Some(1.0),
        Functional::Power(a) if *a > 0.0 && *a < 1.0 => Some(1.0 / a),
        Functional::Power(a) if *a > 1.0 => Some(0.0),
        _ => None,
    }
}

fn method_tag(r: &RiskReport) -> String {
    serde_json::to_value(r.method).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

struct Point<'a> {
    func: &'a Functional,
    func_tag: &'a str,
    est: SweepEstimator,
    dist_tag: &'a str,
    support: usize,
    n: u64,
    seed: u64,
}

fn resolve_distribution(tag: &str, support: usize, n: u64) -> Result<DiscreteDistribution> {
    match tag {
        "uniform" => uniform(support),
        "w" => worst_case_w(support, n),
        "capped" => capped_uniform(support, n),
        other => Err(Error::Parse(format!("unknown sweep distribution '{other}' (uniform, w, capped, worst)"))),
    }
}

fn risk_at(cfg: &SweepConfig, p: &Point, est: &EstimatorSpec) -> Result<(String, RiskReport)> {
    if p.dist_tag == "worst" {
        let opts = SearchOptions { cap: cfg.cap, replicates: cfg.replicates, seed: p.seed };
        let (tag, _, r) = worst_case_search_with(est, p.func, p.support, p.n, opts)?;
        return Ok((format!("worst[{tag}]"), r));
    }
    let dist = resolve_distribution(p.dist_tag, p.support, p.n)?;
    let feasible = outcome_count(p.support, p.n, cfg.cap).is_some();
    let report = match cfg.method {
        SweepMethod::Exact => exact_moments_with_cap(est, p.func, &dist, p.n, cfg.cap)?,
        SweepMethod::Auto if feasible => exact_moments_with_cap(est, p.func, &dist, p.n, cfg.cap)?,
        SweepMethod::Auto | SweepMethod::Bernstein => hybrid_moments(est, p.func, &dist, p.n, cfg.replicates, p.seed)?,
        SweepMethod::Mc => mc_moments(est, p.func, &dist, p.n, cfg.replicates, p.seed)?,
    };
    Ok((p.dist_tag.to_string(), report))
}

fn record(cfg: &SweepConfig, p: &Point) -> SweepRecord {
    let est = p.est.spec(p.support);
    let plug_in = p.est == SweepEstimator::Mle;
    let upper = if plug_in { upper_risk(p.func, p.support, p.n).ok() } else { None };
    let lower = lower_risk(p.func, p.support, p.n, LowerParams { c_minimax: cfg.c_minimax });
    let lower_total = if plug_in { Some(lower.total) } else { lower.miller_madow_total };
    let (s, n) = (p.support as f64, p.n as f64);
    let mut rec = SweepRecord {
        schema_version: SCHEMA_VERSION,
        functional: p.func_tag.to_string(),
        alpha: p.func.alpha(),
        estimator: est.tag(),
        distribution: p.dist_tag.to_string(),
        s: p.support,
        n: p.n,
        method: String::new(),
        replicates: None,
        seed: None,
        truth: None,
        bias: None,
        variance: None,
        mse: None,
        ci_halfwidth: None,
        upper_bias: upper.as_ref().map(|u| u.bias_bound),
        upper_variance: upper.as_ref().map(|u| u.variance_bound),
        upper_total: upper.as_ref().map(|u| u.total),
        lower_total: lower_total.filter(|_| lower.valid),
        lower_valid: Some(lower.valid),
        minimax_rate: minimax_reference(p.func, p.support, p.n).ok(),
        mle_rate: mle_rate_reference(p.func, p.support, p.n).ok(),
        phase_boundary: phase_boundary(p.func),
        log_n_over_log_s: (p.support >= 2).then(|| n.ln() / s.ln()),
        error: None,
    };
    match risk_at(cfg, p, &est) {
        Ok((tag, r)) => {
            rec.distribution = tag;
            rec.method = method_tag(&r);
            rec.replicates = r.replicates;
            rec.seed = r.seed;
            rec.truth = Some(r.truth);
            rec.bias = Some(r.bias);
            rec.variance = Some(r.variance);
            rec.mse = Some(r.mse);
            rec.ci_halfwidth = r.ci_halfwidth;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// One record per (functional, estimator, distribution, S, n) grid point, in
/// that nesting order. Failures are recorded in the row's `error` column.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let funcs: Vec<(String, Functional)> =
        cfg.functionals.iter().map(|t| Functional::parse(t).map(|f| (t.clone(), f))).collect::<Result<_>>()?;
    let mut points = Vec::new();
    for (tag, f) in &funcs {
        for &est in &cfg.estimators {
            for dist in &cfg.distributions {
                for &sup in &cfg.supports {
                    for &n in &cfg.ns {
                        points.push((tag.as_str(), f, est, dist.as_str(), sup.resolve(n), n));
                    }
                }
            }
        }
    }
    Ok(points
        .par_iter()
        .enumerate()
        .map(|(i, &(func_tag, func, est, dist_tag, support, n))| {
            let p = Point { func, func_tag, est, dist_tag, support, n, seed: hash64(cfg.seed, i as u64) };
            if support == 0 || n == 0 {
                let mut r = record_stub(&p);
                r.error = Some("S and n must be >= 1".into());
                return r;
            }
            record(cfg, &p)
        })
        .collect())
}

fn record_stub(p: &Point) -> SweepRecord {
    SweepRecord {
        schema_version: SCHEMA_VERSION,
        functional: p.func_tag.to_string(),
        alpha: p.func.alpha(),
        estimator: p.est.spec(p.support.max(1)).tag(),
        distribution: p.dist_tag.to_string(),
        s: p.support,
        n: p.n,
        method: String::new(),
        replicates: None,
        seed: None,
        truth: None,
        bias: None,
        variance: None,
        mse: None,
        ci_halfwidth: None,
        upper_bias: None,
        upper_variance: None,
        upper_total: None,
        lower_total: None,
        lower_valid: None,
        minimax_rate: None,
        mle_rate: None,
        phase_boundary: phase_boundary(p.func),
        log_n_over_log_s: None,
        error: None,
    }
}

/// Least-squares slope of ln y against ln x; needs at least 4 positive points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 4 {
        return Err(Error::InvalidArgument("slope fit needs at least 4 points".into()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::OutOfRange("slope fit needs positive finite points".into()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}
