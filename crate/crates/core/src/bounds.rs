//! Closed-form risk bounds for the plug-in estimator of entropy and power sums:
//! worst-case upper bounds split into squared bias and variance, matching lower
//! bounds, per-symbol variance bounds, bounded-difference variance bounds, and
//! order-only reference rates.
//!
//! Every function here is a pure formula. Empirical comparison lives in
//! [`crate::risklab`].

use std::f64::consts::{E, LN_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Functional;
use crate::moduli::c_alpha_n;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComponent {
    pub label: String,
    pub value: f64,
}

/// Upper bound on the worst-case mean squared error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub regime: String,
    /// Every candidate bias bound; the bias bound is their minimum.
    pub bias_components: Vec<BoundComponent>,
    pub bias_bound: f64,
    pub variance_bound: f64,
    /// bias_bound² + variance_bound.
    pub total: f64,
    pub sharp_constants: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpperOptions {
    /// Use the tighter constants obtained inside the derivations instead of
    /// the rounded ones in the headline statement. Diagnostic only.
    pub sharp_constants: bool,
}

fn component(label: &str, value: f64) -> BoundComponent {
    BoundComponent { label: label.to_string(), value }
}

fn check_sizes(support: usize, n: u64) -> Result<(f64, f64)> {
    if support == 0 {
        return Err(Error::InvalidArgument("S must be >= 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    Ok((support as f64, n as f64))
}

fn power_alpha(func: &Functional) -> Result<Option<f64>> {
    match func {
        Functional::Entropy => Ok(None),
        Functional::Power(a) if *a == 1.0 => {
            Err(Error::InvalidArgument("power 1 is identically 1; its risk is 0 and no bound applies".into()))
        }
        Functional::Power(a) if *a <= 0.0 || !a.is_finite() => {
            Err(Error::InvalidArgument(format!("power exponent must be > 0, got {a}")))
        }
        Functional::Power(a) => Ok(Some(*a)),
        Functional::Custom(c) => {
            Err(Error::InvalidArgument(format!("no risk bounds for custom functional '{}'", c.label())))
        }
    }
}

/// Variance constant for 0 < α < 1 before it is rounded up to 120/α².
pub fn variance_constant_sharp(alpha: f64) -> f64 {
    (3.0 * alpha * 2f64.powf(3.0 + 2.0 * alpha) + 1.0) / (8.0 * alpha * alpha) * (8.0 * alpha / E).powf(2.0 * alpha)
        + 4.0
}

/// Worst-case MSE bound with the headline constants.
pub fn upper_risk(func: &Functional, support: usize, n: u64) -> Result<BoundReport> {
    upper_risk_with(func, support, n, UpperOptions::default())
}

pub fn upper_risk_with(func: &Functional, support: usize, n: u64, opts: UpperOptions) -> Result<BoundReport> {
    let (s, nf) = check_sizes(support, n)?;
    let sharp = opts.sharp_constants;
    let (regime, comps, variance) = match power_alpha(func)? {
        None => {
            let mut comps = vec![component("log_ratio", (1.0 + (s - 1.0) / nf).ln())];
            if sharp {
                let ln4 = 2.0 * LN_2;
                comps.push(component("ditzian_totik_modulus", 5.0 * s * ln4 / (2.0 * nf) / (1.0 + 1.0 / nf)));
                comps.push(component("pointwise_modulus", 1.5 * ln4 * (s / nf).sqrt()));
            }
            let var = (nf.ln().powi(2) / nf).min(2.0 * (s.ln() + 2.0).powi(2) / nf);
            ("entropy", comps, var)
        }
        Some(a) if a >= 2.0 => {
            let comps = vec![component("smooth_second_derivative", a * (a - 1.0) / (2.0 * nf))];
            ("alpha_at_least_2", comps, a * a / (4.0 * nf))
        }
        Some(a) if a > 1.0 => {
            let mid = if sharp { 1.5 * (2.0 - 2f64.powf(a)).abs() } else { 3.0 };
            let comps = vec![
                component("alphabet_free", 4.0 / nf.powf(a - 1.0)),
                component("pointwise_modulus", mid * s.powf(1.0 - a / 2.0) / nf.powf(a / 2.0)),
                component("ditzian_totik_modulus", c_alpha_n(a, n)? * 5.0 * s / (2.0 * nf)),
            ];
            ("alpha_between_1_and_2", comps, a * a / (4.0 * nf))
        }
        Some(a) => {
            let modulus = if sharp { (2.0 - 2f64.powf(a)).abs() } else { 1.0 };
            let dt_shrink = if sharp { (1.0 + 1.0 / nf).powf(-a) } else { 1.0 };
            let comps = vec![
                component("pointwise_modulus", modulus * 3.0 * s.powf(1.0 - a / 2.0) / (2.0 * nf.powf(a / 2.0))),
                component("ditzian_totik_modulus", modulus * dt_shrink * 5.0 * s / (2.0 * nf.powf(a))),
            ];
            let constant = if sharp { variance_constant_sharp(a) } else { 120.0 / (a * a) };
            let tail = constant * (s / nf.powf(2.0 * a)).min(1.0 / nf.powf(2.0 * a - 1.0));
            if a >= 0.5 {
                ("alpha_half_to_1", comps, 10.0 * s.powf(2.0 - 2.0 * a) / nf + tail)
            } else {
                ("alpha_below_half", comps, 10.0 * s / nf.powf(2.0 * a) + tail)
            }
        }
    };
    let bias_bound = comps.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
    Ok(BoundReport {
        regime: regime.to_string(),
        bias_components: comps,
        bias_bound,
        variance_bound: variance,
        total: bias_bound * bias_bound + variance,
        sharp_constants: sharp,
    })
}

/// Variance bound for (X/n)^α with X ~ Binomial(n, p), 0 < α < 1.
pub fn per_symbol_var_bound(alpha: f64, n: u64, p: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} not in (0, 1)")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("p = {p} not in [0, 1]")));
    }
    let nf = n as f64;
    let a2 = 2.0 * alpha;
    if p <= 1.0 / nf {
        return Ok((2.0 / nf.powf(a2)).min(2.0 * p / nf.powf(a2 - 1.0)));
    }
    Ok(10.0 * p.powf(a2 - 1.0) / nf
        + 3.0 / (2.0 * alpha) * (16.0 * alpha / (E * nf)).powf(a2)
        + 2.0 / nf.powf(a2)
        + 1.0 / (8.0 * alpha * alpha) * (8.0 * alpha / (E * nf)).powf(a2))
}

/// Bounded-difference variance bound for a per-symbol plug-in sum:
/// n·max_j (f((j+1)/n) − f(j/n))², divided by 4 when f is monotone.
pub fn efron_stein_var_bound(func: &Functional, n: u64, monotone: bool) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let nf = n as f64;
    let mut prev = func.value(0.0);
    let mut gap: f64 = 0.0;
    for j in 1..=n {
        let x = j as f64 / nf;
        let cur = func.value(x);
        if !cur.is_finite() {
            return Err(Error::NonFinite { x, value: cur });
        }
        gap = gap.max((cur - prev).abs());
        prev = cur;
    }
    let scale = if monotone { nf / 4.0 } else { nf };
    Ok(scale * gap * gap)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LowerParams {
    /// Constant in front of the ln²S/n minimax term. Not known numerically;
    /// 0 keeps the bound unconditionally valid.
    pub c_minimax: Option<f64>,
}

/// Lower bound on the worst-case mean squared error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub regime: String,
    /// Squared-bias ingredient.
    pub bias_part: f64,
    /// Variance or minimax ingredient.
    pub variance_or_minimax_part: f64,
    pub total: f64,
    pub valid: bool,
    pub unspecified_constant_used: Option<f64>,
    /// Lower bound on |bias| before squaring.
    pub bias_lower: f64,
    /// Same bound for the Miller–Madow corrected entropy estimator.
    pub miller_madow_total: Option<f64>,
}

impl LowerBoundReport {
    fn invalid(regime: &str) -> Self {
        LowerBoundReport {
            regime: regime.to_string(),
            bias_part: 0.0,
            variance_or_minimax_part: 0.0,
            total: 0.0,
            valid: false,
            unspecified_constant_used: None,
            bias_lower: 0.0,
            miller_madow_total: None,
        }
    }
}

/// Lower bound on the unsquared bias of F_α(P_n) at the W distribution, 0 < α < 1.
pub fn power_bias_lower(alpha: f64, support: usize, n: u64) -> f64 {
    let (s, nf) = (support as f64, n as f64);
    alpha * (1.0 - alpha) * (s - 1.0) * (1.0 - 1.0 / nf) / (6.0 * nf.powf(alpha))
}

/// Lower bound on |bias| of H(P_n) at uniform(S); needs n >= 15S.
pub fn entropy_bias_lower(support: usize, n: u64) -> f64 {
    let (s, nf) = (support as f64, n as f64);
    (s - 1.0) / (2.0 * nf) + s * s / (20.0 * nf * nf) - 1.0 / (12.0 * nf * nf)
}

/// Lower bound on |bias| of the Miller–Madow estimator at uniform(S); needs n >= 15S.
pub fn miller_madow_bias_lower(support: usize, n: u64) -> f64 {
    let (s, nf) = (support as f64, n as f64);
    s * s / (20.0 * nf * nf) - 1.0 / (12.0 * nf * nf)
}

/// Worst-case MSE lower bound. Invalid regimes come back with valid = false
/// and total = 0 rather than as errors.
pub fn lower_risk(func: &Functional, support: usize, n: u64, params: LowerParams) -> LowerBoundReport {
    if support == 0 || n == 0 {
        return LowerBoundReport::invalid("invalid_sizes");
    }
    let (s, nf) = (support as f64, n as f64);
    match func {
        Functional::Entropy => {
            if n < 15 * support as u64 {
                return LowerBoundReport::invalid("entropy_needs_n_ge_15s");
            }
            let c = params.c_minimax.unwrap_or(0.0);
            let minimax = c * s.ln().powi(2) / nf;
            let x = entropy_bias_lower(support, n);
            let y = miller_madow_bias_lower(support, n);
            LowerBoundReport {
                regime: "entropy".into(),
                bias_part: x * x,
                variance_or_minimax_part: minimax,
                total: 0.5 * x * x + minimax,
                valid: true,
                unspecified_constant_used: Some(c),
                bias_lower: x,
                miller_madow_total: Some(0.5 * y * y + minimax),
            }
        }
        Functional::Power(a) if *a > 0.0 && *a < 1.0 => {
            let a = *a;
            if n < support as u64 {
                return LowerBoundReport::invalid("power_needs_n_ge_s");
            }
            let bl = power_bias_lower(a, support, n);
            let sq = bl * bl;
            if a < 0.5 {
                return LowerBoundReport {
                    regime: "alpha_below_half".into(),
                    bias_part: sq,
                    variance_or_minimax_part: 0.0,
                    total: sq,
                    valid: true,
                    unspecified_constant_used: None,
                    bias_lower: bl,
                    miller_madow_total: None,
                };
            }
            let big = (2.0 * (s - 1.0)).powf(1.0 - a);
            let small = 2f64.powf(-a);
            let bracket = big - small - (1.0 - a) / (4.0 * nf) * (big + small);
            let minimax = a * a / (32.0 * E * nf) * bracket * bracket - (-nf / 4.0).exp() * s.powf(2.0 * (1.0 - a));
            LowerBoundReport {
                regime: "alpha_half_to_1".into(),
                bias_part: sq,
                variance_or_minimax_part: minimax,
                // max{a, b} >= (a + b)/2, kept signed
                total: 0.5 * (sq + minimax),
                valid: true,
                unspecified_constant_used: None,
                bias_lower: bl,
                miller_madow_total: None,
            }
        }
        Functional::Power(_) => LowerBoundReport::invalid("no_finite_sample_lower_bound"),
        Functional::Custom(_) => LowerBoundReport::invalid("custom_functional"),
    }
}

/// Asymptotic constant for 1 < α < 3/2 with S = cn: liminf n^{2(α−1)}·risk is
/// at least the square of this value.
pub fn lower_risk_alpha_high(alpha: f64, c: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 1.5) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} not in (1, 1.5)")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::OutOfRange(format!("c = {c} must be positive")));
    }
    let a = alpha;
    let poly = 124.0 - 330.0 * a + 285.0 * a * a - 90.0 * a.powi(3) + 11.0 * a.powi(4);
    Ok(a * c.min(1.0).powf(2.0 - a) * poly / 120.0)
}

fn reference_inputs(func: &Functional, support: usize, n: u64) -> Result<(Option<f64>, f64, f64)> {
    if n < 3 {
        return Err(Error::OutOfRange("reference rates need n >= 3".into()));
    }
    if support < 2 {
        return Err(Error::OutOfRange("reference rates need S >= 2".into()));
    }
    Ok((power_alpha(func)?, support as f64, n as f64))
}

/// Order-only minimax rate (no constants).
pub fn minimax_reference(func: &Functional, support: usize, n: u64) -> Result<f64> {
    let (alpha, s, nf) = reference_inputs(func, support, n)?;
    Ok(rate(alpha, s, nf, nf * nf.ln()))
}

/// Order-only worst-case rate of the plug-in estimator (no constants).
pub fn mle_rate_reference(func: &Functional, support: usize, n: u64) -> Result<f64> {
    let (alpha, s, nf) = reference_inputs(func, support, n)?;
    Ok(rate(alpha, s, nf, nf))
}

// Both rates share one shape; the minimax one replaces n by n ln n in the
// bias-driven terms only.
fn rate(alpha: Option<f64>, s: f64, n: f64, eff: f64) -> f64 {
    match alpha {
        None => s * s / (eff * eff) + s.ln().powi(2) / n,
        Some(a) if a <= 0.5 => s * s / eff.powf(2.0 * a),
        Some(a) if a < 1.0 => s * s / eff.powf(2.0 * a) + s.powf(2.0 - 2.0 * a) / n,
        Some(a) if a < 1.5 => eff.powf(-2.0 * (a - 1.0)),
        Some(_) => 1.0 / n,
    }
}
