use rayon::prelude::*;

use super::{Moments, RiskMethod, RiskReport, ValueTable};
use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::model::{eval_functional, CountVector, DiscreteDistribution, Functional};
use crate::special::{binomial_pmf_pq, choose_capped};

/// Largest number of outcomes enumerated by default.
pub const DEFAULT_OUTCOME_CAP: u128 = 10_000_000;

/// Number of compositions of n into S parts, C(n+S-1, S-1), if it is at most `cap`.
pub fn outcome_count(support: usize, n: u64, cap: u128) -> Option<u128> {
    if support == 0 {
        return Some(0);
    }
    choose_capped(n + support as u64 - 1, support as u64 - 1, cap)
}

fn check_cap(support: usize, n: u64, cap: u128) -> Result<u128> {
    outcome_count(support, n, cap).ok_or_else(|| Error::FeasibilityCapExceeded {
        outcomes: outcome_count(support, n, u128::MAX).unwrap_or(u128::MAX),
        cap,
    })
}

/// All compositions of `total` into `parts` non-negative parts, starting at
/// (total, 0, ..., 0) and moving mass rightwards.
#[derive(Debug, Clone)]
pub struct Compositions {
    current: Vec<u64>,
    done: bool,
}

impl Compositions {
    pub fn new(total: u64, parts: usize) -> Self {
        if parts == 0 {
            return Compositions { current: Vec::new(), done: true };
        }
        let mut current = vec![0; parts];
        current[0] = total;
        Compositions { current, done: false }
    }
}

impl Iterator for Compositions {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        // largest i <= k-2 holding mass; its unit and everything in the last slot move to i+1
        match (0..k.saturating_sub(1)).rev().find(|&i| self.current[i] > 0) {
            None => self.done = true,
            Some(i) => {
                let tail = self.current[k - 1];
                self.current[k - 1] = 0;
                self.current[i] -= 1;
                self.current[i + 1] = tail + 1;
            }
        }
        Some(out)
    }
}

/// Sequential-conditional-binomial multinomial mass, with suffix masses
/// precomputed so q = 1 - p never cancels.
struct MultinomialMass {
    probs: Vec<f64>,
    suffix: Vec<f64>,
}

impl MultinomialMass {
    fn new(dist: &DiscreteDistribution) -> Self {
        let probs = dist.probs().to_vec();
        let mut suffix = vec![0.0; probs.len() + 1];
        for i in (0..probs.len()).rev() {
            suffix[i] = suffix[i + 1] + probs[i];
        }
        MultinomialMass { probs, suffix }
    }

    /// Mass of `counts` occupying symbols offset.., given `remaining` draws among them.
    fn tail_mass(&self, offset: usize, counts: &[u64], mut remaining: u64) -> f64 {
        let mut mass = 1.0;
        let last = self.probs.len() - 1;
        for (k, &c) in counts.iter().enumerate() {
            let i = offset + k;
            if i == last {
                return if c == remaining && (remaining == 0 || self.probs[i] > 0.0) { mass } else { 0.0 };
            }
            let here = self.suffix[i];
            let (p, q) = if here > 0.0 { (self.probs[i] / here, self.suffix[i + 1] / here) } else { (0.0, 1.0) };
            mass *= binomial_pmf_pq(c, remaining, p, q);
            if mass == 0.0 {
                return 0.0;
            }
            remaining -= c;
        }
        mass
    }
}

/// Every count vector with its multinomial probability under `dist`.
pub struct Outcomes {
    mass: MultinomialMass,
    inner: Compositions,
    n: u64,
}

impl Iterator for Outcomes {
    type Item = (CountVector, f64);

    fn next(&mut self) -> Option<Self::Item> {
        let counts = self.inner.next()?;
        let p = self.mass.tail_mass(0, &counts, self.n);
        Some((CountVector::new(counts), p))
    }
}

pub fn enumerate_outcomes(dist: &DiscreteDistribution, n: u64) -> Result<Outcomes> {
    enumerate_outcomes_with_cap(dist, n, DEFAULT_OUTCOME_CAP)
}

pub fn enumerate_outcomes_with_cap(dist: &DiscreteDistribution, n: u64, cap: u128) -> Result<Outcomes> {
    check_cap(dist.support_size(), n, cap)?;
    Ok(Outcomes { mass: MultinomialMass::new(dist), inner: Compositions::new(n, dist.support_size()), n })
}

/// Exact bias, variance and MSE by summing over every outcome.
pub fn exact_moments(
    est: &EstimatorSpec,
    func: &Functional,
    dist: &DiscreteDistribution,
    n: u64,
) -> Result<RiskReport> {
    exact_moments_with_cap(est, func, dist, n, DEFAULT_OUTCOME_CAP)
}

pub fn exact_moments_with_cap(
    est: &EstimatorSpec,
    func: &Functional,
    dist: &DiscreteDistribution,
    n: u64,
    cap: u128,
) -> Result<RiskReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("exact moments need n >= 1".into()));
    }
    est.check(func)?;
    let support = dist.support_size();
    check_cap(support, n, cap)?;
    let truth = eval_functional(func, dist)?;
    let table = ValueTable::new(func, n)?;
    let mass = MultinomialMass::new(dist);

    // partition by the first coordinate; chunks merge in index order
    let chunks: Vec<Moments> = (0..=n)
        .into_par_iter()
        .map(|first| {
            let mut acc = Moments::default();
            let head = mass.tail_mass(0, &[first], n);
            if head == 0.0 && support > 1 {
                return acc;
            }
            let mut counts = vec![0u64; support];
            counts[0] = first;
            if support == 1 {
                if first == n {
                    acc.push(head, table.estimate(est, &counts), truth);
                }
                return acc;
            }
            for rest in Compositions::new(n - first, support - 1) {
                let p = head * mass.tail_mass(1, &rest, n - first);
                counts[1..].copy_from_slice(&rest);
                acc.push(p, table.estimate(est, &counts), truth);
            }
            acc
        })
        .collect();
    let m = chunks.into_iter().fold(Moments::default(), Moments::merge);
    Ok(RiskReport {
        truth,
        mean: m.mean,
        bias: m.mean - truth,
        variance: m.m2 / m.weight,
        mse: m.sq_err / m.weight,
        method: RiskMethod::ExactEnum,
        ci_halfwidth: None,
        replicates: None,
        seed: None,
    })
}
