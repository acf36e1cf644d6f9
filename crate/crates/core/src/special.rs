//! Numerically stable binomial probabilities and summation helpers.
//!
//! Binomial masses are evaluated in log space with the saddle-point
//! decomposition of Loader (2000): the log binomial coefficient is written as
//! Stirling's formula plus the Stirling error term, and the power terms are
//! folded into the deviance `bd0`. This keeps relative accuracy near machine
//! precision for `n` up to 10^9, where a plain difference of three log-gamma
//! values loses several digits.

use std::f64::consts::PI;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// ln(k!) for small k, summed directly.
fn ln_factorial_small(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Stirling error: ln(n!) - ln(sqrt(2 pi n) (n/e)^n).
pub fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    if n <= 15 {
        return ln_factorial_small(n) - (nf + 0.5) * nf.ln() + nf - 0.5 * LN_2PI;
    }
    let nn = nf * nf;
    if n > 500 {
        return (S0 - S1 / nn) / nf;
    }
    if n > 80 {
        return (S0 - (S1 - S2 / nn) / nn) / nf;
    }
    if n > 35 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
}

/// Deviance term x ln(x / np) + np - x, accurate when x is close to np.
pub fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// Binomial mass P(X = k) for X ~ Binomial(n, p), with q = 1 - p passed
/// separately so callers can supply it without cancellation.
pub fn binomial_pmf_pq(k: u64, n: u64, p: f64, q: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q <= 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if k == 0 {
        if n == 0 {
            return 1.0;
        }
        let lc = if p < 0.1 { -bd0(nf, nf * q) - nf * p } else { nf * q.ln() };
        return lc.exp();
    }
    if k == n {
        let lc = if q < 0.1 { -bd0(nf, nf * p) - nf * q } else { nf * p.ln() };
        return lc.exp();
    }
    let kf = k as f64;
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Binomial mass with q computed as 1 - p.
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    binomial_pmf_pq(k, n, p, 1.0 - p)
}

/// ln C(n, k), via the same Stirling-error decomposition.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n, "ln_choose requires k <= n");
    if k == 0 || k == n {
        return 0.0;
    }
    let (nf, kf, mf) = (n as f64, k as f64, (n - k) as f64);
    stirlerr(n) - stirlerr(k) - stirlerr(n - k) + nf * nf.ln()
        - kf * kf.ln()
        - mf * mf.ln()
        - 0.5 * (LN_2PI + kf.ln() + mf.ln() - nf.ln())
}

/// Exact C(n, k) in u128, or `None` when it exceeds `limit`.
pub fn choose_capped(n: u64, k: u64, limit: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
        if acc > limit {
            return None;
        }
    }
    Some(acc)
}

/// Pairwise (cascade) summation with a fixed reduction tree.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
