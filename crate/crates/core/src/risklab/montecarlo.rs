use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{hash64, RiskMethod, RiskReport, ValueTable};
use crate::bernstein::exact_bias;
use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::model::{eval_functional, sample_counts_with, DiscreteDistribution, Functional};
use crate::special::pairwise_sum;

pub const MIN_REPLICATES: u64 = 100;

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.576;

/// Estimator values for replicates 0..replicates, in replicate order.
fn draw_estimates(
    est: &EstimatorSpec,
    func: &Functional,
    dist: &DiscreteDistribution,
    n: u64,
    replicates: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidArgument(format!("replicates must be >= {MIN_REPLICATES}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs n >= 1".into()));
    }
    est.check(func)?;
    let table = ValueTable::new(func, n)?;
    Ok((0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(hash64(seed, r));
            let counts = sample_counts_with(dist, n, &mut rng);
            table.estimate(est, counts.counts())
        })
        .collect())
}

fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let len = xs.len() as f64;
    let mean = pairwise_sum(xs) / len;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, pairwise_sum(&dev) / (len - 1.0))
}

/// Monte Carlo bias, variance and MSE with a 99% interval on the MSE.
/// Deterministic in `seed` regardless of thread count.
pub fn mc_moments(
    est: &EstimatorSpec,
    func: &Functional,
    dist: &DiscreteDistribution,
    n: u64,
    replicates: u64,
    seed: u64,
) -> Result<RiskReport> {
    let values = draw_estimates(est, func, dist, n, replicates, seed)?;
    let truth = eval_functional(func, dist)?;
    let (mean, variance) = mean_and_var(&values);
    let sq: Vec<f64> = values.iter().map(|v| (v - truth) * (v - truth)).collect();
    let (mse, sq_var) = mean_and_var(&sq);
    Ok(RiskReport {
        truth,
        mean,
        bias: mean - truth,
        variance,
        mse,
        method: RiskMethod::MonteCarlo,
        ci_halfwidth: Some(Z_99 * (sq_var / replicates as f64).sqrt()),
        replicates: Some(replicates),
        seed: Some(seed),
    })
}

/// E of the additive correction; the observed-support variant uses
/// E[#observed] = Σ (1 - (1 - p_i)^n).
fn expected_offset(est: &EstimatorSpec, dist: &DiscreteDistribution, n: u64) -> f64 {
    match est {
        EstimatorSpec::MillerMadowObserved => {
            let seen: f64 = dist.probs().iter().map(|&p| -(n as f64 * (-p).ln_1p()).exp_m1()).sum();
            (seen.max(1.0) - 1.0) / (2.0 * n as f64)
        }
        other => other.offset(n, 0),
    }
}

/// Exact bias from Bernstein sums plus Monte Carlo variance; for sizes where
/// enumeration is out of reach. The interval covers the variance estimate.
pub fn hybrid_moments(
    est: &EstimatorSpec,
    func: &Functional,
    dist: &DiscreteDistribution,
    n: u64,
    replicates: u64,
    seed: u64,
) -> Result<RiskReport> {
    let values = draw_estimates(est, func, dist, n, replicates, seed)?;
    let truth = eval_functional(func, dist)?;
    let bias = exact_bias(func, dist, n)?.total + expected_offset(est, dist, n);
    let (mean, variance) = mean_and_var(&values);
    let dev4: Vec<f64> = values.iter().map(|v| ((v - mean) * (v - mean) - variance).powi(2)).collect();
    let var_of_sq = pairwise_sum(&dev4) / (values.len() as f64 - 1.0);
    Ok(RiskReport {
        truth,
        mean: truth + bias,
        bias,
        variance,
        mse: bias * bias + variance,
        method: RiskMethod::BernsteinBias,
        ci_halfwidth: Some(Z_99 * (var_of_sq / replicates as f64).sqrt()),
        replicates: Some(replicates),
        seed: Some(seed),
    })
}
