//! Bernstein polynomials and the exact bias of plug-in estimators.
//!
//! For X ~ Binomial(n, x) we have E f(X/n) = B_n[f](x), so the bias of the
//! plug-in estimate of Σ f(p_i) is the summed Bernstein approximation error
//! Σ_i (B_n[f](p_i) - f(p_i)). Everything here is deterministic; no sampling.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, Functional};
use crate::special::{binomial_pmf_pq, pairwise_sum};

/// Above this n, [`apply`] sums only a window around nx.
pub const TRUNCATION_THRESHOLD: u64 = 5000;

/// Largest tail mass (times sup |f|) the truncated sum may drop.
pub const TRUNCATION_TAIL_TOLERANCE: f64 = 1e-12;

/// Bernstein basis B_{j,n}(x) = C(n, j) x^j (1-x)^(n-j).
pub fn basis(j: u64, n: u64, x: f64) -> Result<f64> {
    if j > n {
        return Err(Error::OutOfRange(format!("basis index j = {j} exceeds n = {n}")));
    }
    check_unit(x)?;
    Ok(binomial_pmf_pq(j, n, x, 1.0 - x))
}

fn check_unit(x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange(format!("x = {x} is outside [0, 1]")));
    }
    Ok(())
}

fn sup_abs(func: &Functional) -> Option<f64> {
    match func {
        Functional::Entropy => Some((-1.0f64).exp()),
        Functional::Power(_) => Some(1.0),
        Functional::Custom(_) => None,
    }
}

/// Index window [lo, hi] for the truncated sum, or `None` for the full sum.
fn window(func: &Functional, n: u64, x: f64) -> Option<(u64, u64)> {
    if n <= TRUNCATION_THRESHOLD {
        return None;
    }
    let sup = sup_abs(func)?;
    let nf = n as f64;
    let var = nf * (x * (1.0 - x)).max(1.0 / nf);
    let half = 12.0 * var.sqrt() + 25.0;
    // Bernstein's inequality on each side of the mean
    let tail = 2.0 * (-half * half / (2.0 * (nf * x * (1.0 - x) + half / 3.0))).exp();
    if sup * tail > TRUNCATION_TAIL_TOLERANCE {
        return None;
    }
    let centre = nf * x;
    let lo = (centre - half).floor().max(0.0) as u64;
    let hi = ((centre + half).ceil() as u64).min(n);
    Some((lo, hi))
}

/// B_n[f](x) = Σ_j f(j/n) B_{j,n}(x).
///
/// For n above [`TRUNCATION_THRESHOLD`] and a built-in functional the sum runs
/// over |j - nx| <= 12 sqrt(n max(x(1-x), 1/n)) + 25 only; the dropped tail is
/// below [`TRUNCATION_TAIL_TOLERANCE`]. Custom functionals always use the full sum.
pub fn apply(func: &Functional, n: u64, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("Bernstein operator needs n >= 1".into()));
    }
    check_unit(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(func.value(1.0));
    }
    let (lo, hi) = window(func, n, x).unwrap_or((0, n));
    let nf = n as f64;
    let q = 1.0 - x;
    let mut acc = 0.0;
    for j in lo.max(1)..=hi {
        let w = binomial_pmf_pq(j, n, x, q);
        if w == 0.0 {
            continue;
        }
        acc += func.value(j as f64 / nf) * w;
    }
    Ok(acc)
}

/// The Bernstein operator on an arbitrary function handle: full sum over
/// j = 0..=n, with no f(0) = 0 convention applied.
pub fn apply_raw<F: Fn(f64) -> f64>(f: F, n: u64, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("Bernstein operator needs n >= 1".into()));
    }
    check_unit(x)?;
    let nf = n as f64;
    let q = 1.0 - x;
    Ok((0..=n)
        .map(|j| (j, binomial_pmf_pq(j, n, x, q)))
        .filter(|&(_, w)| w > 0.0)
        .map(|(j, w)| f(j as f64 / nf) * w)
        .sum())
}

/// Per-symbol and total bias of the plug-in estimator at (P, n).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasDecomposition {
    pub per_symbol: Vec<f64>,
    pub total: f64,
}

/// Exact bias E F(P_n) - F(P), one Bernstein sum per distinct p_i.
pub fn exact_bias(func: &Functional, dist: &DiscreteDistribution, n: u64) -> Result<BiasDecomposition> {
    if n == 0 {
        return Err(Error::InvalidArgument("exact bias needs n >= 1".into()));
    }
    let probs = dist.probs();
    let mut distinct: Vec<f64> = Vec::new();
    let mut slot: HashMap<u64, usize> = HashMap::new();
    let index: Vec<usize> = probs
        .iter()
        .map(|&p| {
            *slot.entry(p.to_bits()).or_insert_with(|| {
                distinct.push(p);
                distinct.len() - 1
            })
        })
        .collect();
    let errors: Vec<f64> =
        distinct.par_iter().map(|&p| apply(func, n, p).map(|b| b - func.value(p))).collect::<Result<_>>()?;
    let per_symbol: Vec<f64> = index.iter().map(|&k| errors[k]).collect();
    let total = pairwise_sum(&per_symbol);
    Ok(BiasDecomposition { per_symbol, total })
}

/// Closed-form B_n[(t - x0)^k](x0) for k = 2..=5, i.e. E(X/n - x0)^k.
pub fn central_moment(k: u32, n: u64, x0: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("central moment needs n >= 1".into()));
    }
    check_unit(x0)?;
    let nf = n as f64;
    let a = x0 * (1.0 - x0);
    let skew = 1.0 - 2.0 * x0;
    match k {
        2 => Ok(a / nf),
        3 => Ok(a / (nf * nf) * skew),
        4 => Ok(3.0 * a * a / (nf * nf) + a / nf.powi(3) * (1.0 - 6.0 * a)),
        5 => Ok((10.0 * a * a / nf.powi(3) + a / nf.powi(4) * (1.0 - 12.0 * a)) * skew),
        _ => Err(Error::OutOfRange(format!("central moment order {k} not in 2..=5"))),
    }
}

/// Unclamped degree-5 Taylor lower estimate of f(x) - B_n[f](x) for
/// f(x) = -x^α, 1 < α < 2. Can be negative; see [`taylor_lower_alpha_high`].
pub fn taylor_lower_alpha_high_raw(alpha: f64, n: u64, x: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} not in (1, 2)")));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfRange(format!("x = {x} not in (0, 1)")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let nf = n as f64;
    let a = alpha;
    let lead = a * (a - 1.0) * x.powf(a - 2.0) * (1.0 - x) / (2.0 * nf)
        * (x + (2.0 - a) * (3.0 * a - 1.0) * x / (12.0 * nf) + (2.0 - a) * (5.0 - 3.0 * a) / (12.0 * nf));
    let c4 = a * (a - 1.0) * (a - 2.0) * (a - 3.0);
    let r1 = c4 * x.powf(a - 3.0) * (1.0 - x) / 24.0 * (1.0 + 2.0 * (1.0 - x) * ((5.0 - 2.0 * a) * x + a - 4.0));
    let r2 = c4 * (a - 4.0) * x.powf(a - 4.0) * (1.0 - x) * (1.0 - 2.0 * x) * (1.0 - 12.0 * x * (1.0 - x)) / 120.0;
    Ok(lead + r1 / nf.powi(3) + r2 / nf.powi(4))
}

/// Lower bound on f(x) - B_n[f](x) for f(x) = -x^α, 1 < α < 2.
///
/// The remainder terms grow like x^(α-3) and x^(α-4) near zero, so the
/// estimate is mostly informative away from the origin.
pub fn taylor_lower_alpha_high(alpha: f64, n: u64, x: f64) -> Result<f64> {
    Ok(taylor_lower_alpha_high_raw(alpha, n, x)?.max(0.0))
}

/// Lower bound on f(x) - B_n[f](x) for f(x) = x^α, 0 < α < 1.
pub fn taylor_lower_alpha_low(alpha: f64, n: u64, x: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} not in (0, 1)")));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfRange(format!("x = {x} not in (0, 1)")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let nf = n as f64;
    let v = alpha * (1.0 - alpha) / (2.0 * nf) * x.powf(alpha - 2.0) * (1.0 - x) * (x - (2.0 - alpha) / (3.0 * nf));
    Ok(v.max(0.0))
}

/// Lower bound on g(x) - B_n[g](x) for g(x) = -x ln x, valid for x >= 15/n.
pub fn taylor_lower_entropy(n: u64, x: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let nf = n as f64;
    if x < 15.0 / nf || x > 1.0 {
        return Err(Error::OutOfRange(format!("x = {x} outside [15/n, 1] = [{}, 1]", 15.0 / nf)));
    }
    Ok((1.0 - x) / (2.0 * nf) + 1.0 / (20.0 * nf * nf * x) - x / (12.0 * nf * nf))
}

/// Fixed-P asymptotic expansion of the entropy bias (not a bound, and not
/// uniform in P). Order 1: -(S-1)/(2n). Order 2 adds (1 - Σ 1/p_i)/(12 n^2).
pub fn asymptotic_bias_entropy(dist: &DiscreteDistribution, n: u64, order: u8) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let nf = n as f64;
    let s = dist.support_size() as f64;
    let first = -(s - 1.0) / (2.0 * nf);
    match order {
        1 => Ok(first),
        2 => {
            if dist.probs().iter().any(|&p| p <= 0.0) {
                return Err(Error::InvalidArgument("second-order expansion needs every p_i > 0".into()));
            }
            let inv: f64 = dist.probs().iter().map(|p| 1.0 / p).sum();
            Ok(first + (1.0 - inv) / (12.0 * nf * nf))
        }
        _ => Err(Error::OutOfRange(format!("expansion order {order} not in {{1, 2}}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_distribution, uniform, worst_case_w};
    use std::f64::consts::LN_2;

    // Brute-force E f(X/n) with X ~ Binomial(n, x) via statrs' pmf.
    fn binomial_expectation(n: u64, x: f64, f: impl Fn(f64) -> f64) -> f64 {
        use statrs::distribution::{Binomial, Discrete};
        let b = Binomial::new(x, n).unwrap();
        (0..=n).map(|j| f(j as f64 / n as f64) * b.pmf(j)).sum()
    }

    #[test]
    fn basis_examples() {
        assert!((basis(1, 2, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(basis(0, 37, 0.0).unwrap(), 1.0);
        assert!(basis(3, 2, 0.5).is_err());
        assert!(basis(0, 2, 1.5).is_err());
        let s: f64 = (0..=10).map(|j| basis(j, 10, 0.37).unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_of_unity() {
        for n in [1u64, 10, 100, 10_000] {
            for i in 0..=20 {
                let x = i as f64 / 20.0;
                let s: f64 = (0..=n).map(|j| basis(j, n, x).unwrap()).sum();
                assert!((s - 1.0).abs() < 1e-12, "n={n} x={x}: {s}");
            }
        }
    }

    #[test]
    fn apply_examples() {
        let sq = Functional::custom("square", |x| x * x);
        assert!((apply(&sq, 2, 0.5).unwrap() - 0.375).abs() < 1e-15);
        // j = 1 is the only nonzero term: f(1/2) B_{1,2}(1/2) = (ln 2 / 2)(1/2);
        // summed over the two symbols of uniform(2) this is E H(P_2) = ln 2 / 2
        let h = apply(&Functional::Entropy, 2, 0.5).unwrap();
        assert!((h - 0.25 * LN_2).abs() < 1e-15);
        assert!((2.0 * h - 0.3465736).abs() < 1e-7);
        assert!(apply(&Functional::Entropy, 0, 0.5).is_err());
    }

    #[test]
    fn affine_reproduction_and_endpoints() {
        for n in [1u64, 4, 90, 3000] {
            for i in 0..=20 {
                let x = i as f64 / 20.0;
                let b = apply_raw(|t| -0.7 * t + 0.4, n, x).unwrap();
                assert!((b - (-0.7 * x + 0.4)).abs() < 1e-12, "n={n} x={x}");
            }
        }
        let affine = Functional::custom("affine", |x| 3.0 * x - 1.25);
        for n in [1u64, 7, 100, 6000] {
            for i in 1..20 {
                let x = i as f64 / 20.0;
                let b = apply(&affine, n, x).unwrap();
                // f(0) is forced to 0, so B_n picks up -(-1.25) (1-x)^n from j = 0
                let expect = 3.0 * x - 1.25 + 1.25 * (1.0 - x).powi(n as i32);
                assert!((b - expect).abs() < 1e-12, "n={n} x={x}");
            }
        }
        let lin = Functional::custom("linear", |x| 2.0 * x);
        for n in [1u64, 13, 250] {
            for i in 0..=10 {
                let x = i as f64 / 10.0;
                assert!((apply(&lin, n, x).unwrap() - 2.0 * x).abs() < 1e-12);
            }
        }
        for f in [Functional::Entropy, Functional::Power(0.3), Functional::Power(2.5)] {
            for n in [1u64, 9, 10_000] {
                assert_eq!(apply(&f, n, 0.0).unwrap(), 0.0);
                assert_eq!(apply(&f, n, 1.0).unwrap(), f.value(1.0));
            }
        }
    }

    #[test]
    fn truncated_sum_matches_full_sum() {
        for f in [Functional::Entropy, Functional::Power(0.5), Functional::Power(1.5)] {
            for &x in &[1e-6, 3e-4, 0.01, 0.3, 0.5, 0.999] {
                let n = 20_000u64;
                let full: f64 = (1..=n).map(|j| f.value(j as f64 / n as f64) * binomial_pmf_pq(j, n, x, 1.0 - x)).sum();
                let t = apply(&f, n, x).unwrap();
                assert!((full - t).abs() < 1e-12, "{:?} x={x}: {full} vs {t}", f);
            }
        }
    }

    #[test]
    fn apply_matches_statrs_oracle() {
        for &(n, x) in &[(10u64, 0.3), (57, 0.01), (300, 0.77)] {
            for f in [Functional::Entropy, Functional::Power(0.5), Functional::Power(1.25)] {
                let oracle = binomial_expectation(n, x, |t| f.value(t));
                assert!((apply(&f, n, x).unwrap() - oracle).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_bias_examples() {
        let b = exact_bias(&Functional::Entropy, &uniform(2).unwrap(), 2).unwrap();
        assert!((b.total + LN_2 / 2.0).abs() < 1e-15);
        assert!((b.total - b.per_symbol.iter().sum::<f64>()).abs() < 1e-12);
        // outcomes (2,0), (1,1), (0,2) with probabilities 1/4, 1/2, 1/4
        let b = exact_bias(&Functional::Power(0.5), &uniform(2).unwrap(), 2).unwrap();
        let expect = 0.25 * 1.0 + 0.5 * 2.0 * 0.5f64.sqrt() + 0.25 * 1.0 - 2f64.sqrt();
        assert!((b.total - expect).abs() < 1e-14);
        assert!((b.total + 0.2071068).abs() < 1e-7);
    }

    #[test]
    fn bias_signs_follow_concavity() {
        let dists =
            [make_distribution(&[0.1, 0.2, 0.3, 0.4]).unwrap(), worst_case_w(5, 40).unwrap(), uniform(7).unwrap()];
        for d in &dists {
            for n in [1u64, 5, 60] {
                for e in exact_bias(&Functional::Entropy, d, n).unwrap().per_symbol {
                    assert!(e <= 1e-15);
                }
                for e in exact_bias(&Functional::Power(0.6), d, n).unwrap().per_symbol {
                    assert!(e <= 1e-15);
                }
                for e in exact_bias(&Functional::Power(1.6), d, n).unwrap().per_symbol {
                    assert!(e >= -1e-15);
                }
            }
        }
    }

    #[test]
    fn central_moment_examples() {
        assert!((central_moment(2, 10, 0.5).unwrap() - 0.025).abs() < 1e-16);
        for n in [1u64, 3, 50] {
            assert!(central_moment(3, n, 0.5).unwrap().abs() < 1e-18);
        }
        assert!((central_moment(3, 4, 0.25).unwrap() - 0.005859375).abs() < 1e-16);
        assert!(central_moment(6, 4, 0.25).is_err());
        assert!(central_moment(1, 4, 0.25).is_err());
    }

    #[test]
    fn central_moments_match_brute_force() {
        for n in [1u64, 2, 7, 40, 200] {
            for &x0 in &[0.0, 0.05, 0.25, 0.5, 0.63, 0.9, 1.0] {
                for k in 2..=5u32 {
                    let brute = binomial_expectation(n, x0, |t| (t - x0).powi(k as i32));
                    let closed = central_moment(k, n, x0).unwrap();
                    assert!((brute - closed).abs() < 1e-10, "k={k} n={n} x0={x0}");
                }
            }
        }
    }

    #[test]
    fn alpha_high_examples() {
        let fa = Functional::custom("neg_pow", |x: f64| -x.powf(1.25));
        let exact = fa.value(0.5) - apply(&fa, 50, 0.5).unwrap();
        let lower = taylor_lower_alpha_high(1.25, 50, 0.5).unwrap();
        assert!(lower >= 0.0 && lower <= exact, "{lower} vs {exact}");
        assert!(taylor_lower_alpha_high(2.0, 50, 0.5).is_err());
        assert!(taylor_lower_alpha_high(1.5, 50, 0.0).is_err());
        // α -> 2: corrections vanish and R_1, R_2 carry a factor (α - 2)
        let (n, x) = (40u64, 0.3);
        let near = taylor_lower_alpha_high_raw(2.0 - 1e-9, n, x).unwrap();
        let limit = 2.0 * x.powf(0.0) * (1.0 - x) * x / (2.0 * n as f64);
        assert!((near - limit).abs() < 1e-9);
    }

    #[test]
    fn alpha_high_raw_can_be_negative_and_clamps() {
        let raw = taylor_lower_alpha_high_raw(1.1, 3, 0.01).unwrap();
        let clamped = taylor_lower_alpha_high(1.1, 3, 0.01).unwrap();
        assert_eq!(clamped, raw.max(0.0));
        assert!(clamped >= 0.0);
    }

    #[test]
    fn alpha_low_examples() {
        let v = taylor_lower_alpha_low(0.5, 10, 0.5).unwrap();
        assert!((v - 0.0125 * 0.5f64.powf(-1.5) * 0.5 * 0.45).abs() < 1e-15);
        assert!((v - 0.0079550).abs() < 1e-7);
        assert_eq!(taylor_lower_alpha_low(0.5, 10, 0.04).unwrap(), 0.0);
        assert!(taylor_lower_alpha_low(1.0, 10, 0.5).is_err());
    }

    #[test]
    fn entropy_lower_examples() {
        let v = taylor_lower_entropy(60, 0.25).unwrap();
        assert!((v - (0.75 / 120.0 + 1.0 / 18000.0 - 0.25 / 43200.0)).abs() < 1e-15);
        assert!((v - 0.0062998).abs() < 1e-7);
        assert!(taylor_lower_entropy(60, 0.2).is_err());
        let g = Functional::Entropy;
        let exact = g.value(0.5) - apply(&g, 1000, 0.5).unwrap();
        assert!(taylor_lower_entropy(1000, 0.5).unwrap() <= exact);
    }

    #[test]
    fn taylor_lower_bounds_hold_on_grids() {
        for &alpha in &[1.1, 1.25, 1.5, 1.9] {
            let fa = Functional::custom("neg_pow", move |x: f64| -x.powf(alpha));
            for n in [5u64, 20, 100] {
                for i in 1..50 {
                    let x = i as f64 / 50.0;
                    let exact = fa.value(x) - apply(&fa, n, x).unwrap();
                    let lower = taylor_lower_alpha_high(alpha, n, x).unwrap();
                    assert!(lower <= exact + 1e-14, "alpha={alpha} n={n} x={x}");
                }
            }
        }
        for &alpha in &[0.2, 0.5, 0.8] {
            let f = Functional::Power(alpha);
            for n in [5u64, 20, 100] {
                for i in 1..50 {
                    let x = i as f64 / 50.0;
                    if x < 1.0 / n as f64 {
                        continue;
                    }
                    let exact = f.value(x) - apply(&f, n, x).unwrap();
                    assert!(taylor_lower_alpha_low(alpha, n, x).unwrap() <= exact + 1e-14);
                }
            }
        }
        for n in [15u64, 60, 400] {
            for i in 0..=40 {
                let x = 15.0 / n as f64 + (1.0 - 15.0 / n as f64) * i as f64 / 40.0;
                let exact = Functional::Entropy.value(x) - apply(&Functional::Entropy, n, x).unwrap();
                assert!(taylor_lower_entropy(n, x).unwrap() <= exact + 1e-14, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn asymptotic_examples() {
        let u4 = uniform(4).unwrap();
        assert!((asymptotic_bias_entropy(&u4, 100, 1).unwrap() + 0.015).abs() < 1e-15);
        assert!((asymptotic_bias_entropy(&u4, 100, 2).unwrap() + 0.015125).abs() < 1e-15);
        let one = uniform(1).unwrap();
        assert_eq!(asymptotic_bias_entropy(&one, 10, 1).unwrap(), 0.0);
        assert_eq!(asymptotic_bias_entropy(&one, 10, 2).unwrap(), 0.0);
        let z = make_distribution(&[0.5, 0.5, 0.0]).unwrap();
        assert!(asymptotic_bias_entropy(&z, 10, 2).is_err());
        assert!(asymptotic_bias_entropy(&u4, 10, 3).is_err());
    }
}
