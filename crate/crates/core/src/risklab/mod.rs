//! Ground-truth risk engines: exact expectation over every multinomial
//! outcome, seeded Monte Carlo, a candidate-family worst-case search, and
//! parameter sweeps that join empirical risk with the closed-form bounds.

mod enumerate;
mod montecarlo;
mod search;
mod sweep;

pub use enumerate::{
    enumerate_outcomes, enumerate_outcomes_with_cap, exact_moments, exact_moments_with_cap, outcome_count,
    Compositions, Outcomes, DEFAULT_OUTCOME_CAP,
};
pub use montecarlo::{hybrid_moments, mc_moments, MIN_REPLICATES, Z_99};
pub use search::{candidate_family, worst_case_search, SearchOptions};
pub use sweep::{
    fit_loglog_slope, phase_boundary, sweep, SupportSpec, SweepConfig, SweepEstimator, SweepMethod, SweepRecord,
    SCHEMA_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::estimators::EstimatorSpec;
use crate::model::Functional;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMethod {
    ExactEnum,
    /// Exact bias through Bernstein sums, variance from Monte Carlo.
    BernsteinBias,
    MonteCarlo,
}

/// Bias, variance and mean squared error of an estimator at (P, n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub method: RiskMethod,
    /// 99% half-width on the MSE (Monte Carlo) or on the variance (hybrid).
    pub ci_halfwidth: Option<f64>,
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
}

/// SplitMix64 finalizer applied to (seed, index): independent per-replicate
/// seeds that do not depend on scheduling or batching.
pub fn hash64(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// f(j/n) for j = 0..=n, so per-outcome estimates are table lookups.
pub(crate) struct ValueTable {
    values: Vec<f64>,
    n: u64,
}

impl ValueTable {
    pub(crate) fn new(func: &Functional, n: u64) -> crate::Result<Self> {
        let nf = n as f64;
        let values = (0..=n)
            .map(|j| {
                let x = j as f64 / nf;
                let v = func.value(x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(crate::Error::NonFinite { x, value: v })
                }
            })
            .collect::<crate::Result<Vec<f64>>>()?;
        Ok(ValueTable { values, n })
    }

    pub(crate) fn estimate(&self, est: &EstimatorSpec, counts: &[u64]) -> f64 {
        let mut total = 0.0;
        let mut observed = 0;
        for &c in counts {
            if c > 0 {
                total += self.values[c as usize];
                observed += 1;
            }
        }
        total + est.offset(self.n, observed)
    }
}

/// Weighted mean / second-moment accumulator that merges exactly in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    pub weight: f64,
    pub mean: f64,
    pub m2: f64,
    /// Σ w (v - truth)².
    pub sq_err: f64,
}

impl Moments {
    pub(crate) fn push(&mut self, w: f64, v: f64, truth: f64) {
        if w <= 0.0 {
            return;
        }
        self.weight += w;
        let delta = v - self.mean;
        self.mean += delta * w / self.weight;
        self.m2 += w * delta * (v - self.mean);
        self.sq_err += w * (v - truth) * (v - truth);
    }

    pub(crate) fn merge(self, other: Moments) -> Moments {
        if other.weight == 0.0 {
            return self;
        }
        if self.weight == 0.0 {
            return other;
        }
        let weight = self.weight + other.weight;
        let delta = other.mean - self.mean;
        Moments {
            weight,
            mean: self.mean + delta * other.weight / weight,
            m2: self.m2 + other.m2 + delta * delta * self.weight * other.weight / weight,
            sq_err: self.sq_err + other.sq_err,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash64_spreads_adjacent_inputs() {
        let a = hash64(1, 0);
        let b = hash64(1, 1);
        let c = hash64(2, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert!((a ^ b).count_ones() > 10);
        assert_eq!(hash64(7, 9), hash64(7, 9));
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let data: Vec<(f64, f64)> = (0..50).map(|i| (0.5 + (i % 7) as f64, (i as f64).sin())).collect();
        let mut whole = Moments::default();
        for &(w, v) in &data {
            whole.push(w, v, 0.1);
        }
        let (l, r) = data.split_at(17);
        let mut a = Moments::default();
        let mut b = Moments::default();
        l.iter().for_each(|&(w, v)| a.push(w, v, 0.1));
        r.iter().for_each(|&(w, v)| b.push(w, v, 0.1));
        let m = a.merge(b);
        assert!((m.mean - whole.mean).abs() < 1e-14);
        assert!((m.m2 - whole.m2).abs() < 1e-12);
        assert!((m.sq_err - whole.sq_err).abs() < 1e-12);
    }
}
