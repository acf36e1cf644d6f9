//! Moduli of smoothness on [0, 1]: closed forms for entropy and powers, a
//! grid-plus-golden-section optimizer for arbitrary f, the constant
//! C_{α,n} = n ω²_φ(x^α, n^{-1/2}), and modulus-based plug-in bias bounds.
//!
//! Second-order moduli are searched over the midpoint M = (u+v)/2 with the
//! half-width pushed to its largest feasible value h(M). For ω²_φ that is
//! h(M) = min(tφ(M), M, 1-M), which splits [0,1] into three regimes: the left
//! end pinned at 0, an interior stretch, and the right end pinned at 1. For
//! convex or concave f the symmetric second difference grows with the
//! half-width, so the supremum lies on this curve.

use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::sync::{OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Functional;

/// Grid size used by [`c_alpha_n`] and by bias bounds that need a numeric modulus.
pub const DEFAULT_GRID: usize = 100_000;

const MIN_GRID: usize = 1000;
const GOLDEN_ITERS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusKind {
    Omega1,
    Omega2,
    Omega1Phi,
    Omega2Phi,
}

impl ModulusKind {
    pub fn parse(text: &str) -> Result<Self> {
        match text.to_ascii_lowercase().as_str() {
            "omega1" => Ok(ModulusKind::Omega1),
            "omega2" => Ok(ModulusKind::Omega2),
            "omega1phi" | "omega1_phi" => Ok(ModulusKind::Omega1Phi),
            "omega2phi" | "omega2_phi" => Ok(ModulusKind::Omega2Phi),
            other => {
                Err(Error::Parse(format!("unknown modulus '{other}' (expected omega1, omega2, omega1phi, omega2phi)")))
            }
        }
    }

    fn second_order(self) -> bool {
        matches!(self, ModulusKind::Omega2 | ModulusKind::Omega2Phi)
    }

    fn weighted(self) -> bool {
        matches!(self, ModulusKind::Omega1Phi | ModulusKind::Omega2Phi)
    }
}

/// φ(x) = sqrt(x(1-x)).
#[inline]
pub fn phi(x: f64) -> f64 {
    (x * (1.0 - x)).max(0.0).sqrt()
}

/// Closed-form second-order moduli of -x ln x and x^α.
pub fn omega_closed(kind: ModulusKind, func: &Functional, t: f64) -> Result<f64> {
    match kind {
        ModulusKind::Omega2 => {
            if !(t > 0.0 && t <= 0.5) {
                return Err(Error::OutOfRange(format!("omega2 closed form needs 0 < t <= 1/2, got {t}")));
            }
        }
        ModulusKind::Omega2Phi => {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::OutOfRange(format!("omega2phi closed form needs 0 < t <= 1, got {t}")));
            }
        }
        _ => return Err(Error::NoClosedForm(format!("{kind:?} has no closed form here"))),
    }
    let ln4 = 2.0 * LN_2;
    match (kind, func) {
        (ModulusKind::Omega2, Functional::Entropy) => Ok(t * ln4),
        (ModulusKind::Omega2Phi, Functional::Entropy) => Ok(t * t * ln4 / (1.0 + t * t)),
        (_, Functional::Power(a)) if *a >= 2.0 || *a == 1.0 => {
            Err(Error::NoClosedForm(format!("power {a}: use the second-derivative bound")))
        }
        (ModulusKind::Omega2, Functional::Power(a)) => Ok((2.0 - 2f64.powf(*a)).abs() * t.powf(*a)),
        (ModulusKind::Omega2Phi, Functional::Power(a)) if *a < 1.0 => {
            Ok((2.0 - 2f64.powf(*a)).abs() * t.powf(2.0 * a) / (1.0 + t * t).powf(*a))
        }
        (ModulusKind::Omega2Phi, Functional::Power(a)) => {
            Err(Error::NoClosedForm(format!("weighted modulus of x^{a} is only known up to constants (order t^2)")))
        }
        (_, Functional::Custom(c)) => Err(Error::NoClosedForm(format!("custom functional '{}'", c.label()))),
        _ => unreachable!("first-order kinds returned above"),
    }
}

/// Where the numeric supremum was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub value: f64,
    pub u: f64,
    pub v: f64,
}

/// Grid-based lower estimate of the modulus of `f` at step `t`.
pub fn omega_numeric(kind: ModulusKind, f: &dyn Fn(f64) -> f64, t: f64, grid_points: usize) -> Result<f64> {
    omega_numeric_detail(kind, f, t, grid_points).map(|e| e.value)
}

/// Like [`omega_numeric`], also returning the maximizing pair (u, v).
pub fn omega_numeric_detail(
    kind: ModulusKind,
    f: &dyn Fn(f64) -> f64,
    t: f64,
    grid_points: usize,
) -> Result<ModulusEstimate> {
    if grid_points < MIN_GRID {
        return Err(Error::InvalidArgument(format!("grid_points must be >= {MIN_GRID}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::OutOfRange(format!("t = {t} must be finite and >= 0")));
    }
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite { x, value: y })
        }
    };
    if t == 0.0 {
        return Ok(ModulusEstimate { value: 0.0, u: 0.0, v: 0.0 });
    }
    if kind.second_order() {
        second_order(kind, &eval, t, grid_points)
    } else {
        first_order(kind, &eval, t, grid_points)
    }
}

fn half_width(kind: ModulusKind, t: f64, m: f64) -> f64 {
    let reach = if kind.weighted() { t * phi(m) } else { t };
    reach.min(m).min(1.0 - m).max(0.0)
}

fn second_order(kind: ModulusKind, eval: &dyn Fn(f64) -> Result<f64>, t: f64, grid: usize) -> Result<ModulusEstimate> {
    let objective = |m: f64| -> Result<(f64, f64, f64)> {
        let h = half_width(kind, t, m);
        let (u, v) = ((m - h).max(0.0), (m + h).min(1.0));
        let val = (eval(u)? - 2.0 * eval(m)? + eval(v)?).abs();
        Ok((val, u, v))
    };
    let step = 1.0 / grid as f64;
    let mut best = ModulusEstimate { value: 0.0, u: 0.0, v: 0.0 };
    let mut best_m = 0.0;
    for k in 0..=grid {
        let m = k as f64 * step;
        let (val, u, v) = objective(m)?;
        if val > best.value {
            best = ModulusEstimate { value: val, u, v };
            best_m = m;
        }
    }
    let lo = (best_m - step).max(0.0);
    let hi = (best_m + step).min(1.0);
    let (m, _) = golden_max(lo, hi, |m| objective(m).map(|r| r.0))?;
    let (val, u, v) = objective(m)?;
    if val > best.value {
        best = ModulusEstimate { value: val, u, v };
    }
    Ok(best)
}

/// Largest v >= u with (u, v) admissible for a first-order modulus.
fn reach_right(kind: ModulusKind, t: f64, u: f64) -> f64 {
    match kind {
        ModulusKind::Omega1 => (u + t).min(1.0),
        _ => {
            // g(v) = v - u - tφ((u+v)/2) is convex with g(u) <= 0
            let g = |v: f64| v - u - t * phi(0.5 * (u + v));
            if g(1.0) <= 0.0 {
                return 1.0;
            }
            let (mut lo, mut hi) = (u, 1.0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if g(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    }
}

/// Range-extremum table over grid values.
struct SparseTable {
    max: Vec<Vec<(f64, usize)>>,
    min: Vec<Vec<(f64, usize)>>,
}

impl SparseTable {
    fn new(values: &[f64]) -> Self {
        let base: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
        let mut max = vec![base.clone()];
        let mut min = vec![base];
        let mut width = 1;
        while 2 * width <= values.len() {
            let (pm, pn) = (max.last().unwrap(), min.last().unwrap());
            let len = values.len() + 1 - 2 * width;
            let nm = (0..len).map(|i| if pm[i].0 >= pm[i + width].0 { pm[i] } else { pm[i + width] }).collect();
            let nn = (0..len).map(|i| if pn[i].0 <= pn[i + width].0 { pn[i] } else { pn[i + width] }).collect();
            max.push(nm);
            min.push(nn);
            width *= 2;
        }
        SparseTable { max, min }
    }

    fn query(&self, lo: usize, hi: usize) -> ((f64, usize), (f64, usize)) {
        let level = (usize::BITS - 1 - (hi - lo + 1).leading_zeros()) as usize;
        let right = hi + 1 - (1 << level);
        let (a, b) = (self.max[level][lo], self.max[level][right]);
        let (c, d) = (self.min[level][lo], self.min[level][right]);
        (if a.0 >= b.0 { a } else { b }, if c.0 <= d.0 { c } else { d })
    }
}

fn first_order(kind: ModulusKind, eval: &dyn Fn(f64) -> Result<f64>, t: f64, grid: usize) -> Result<ModulusEstimate> {
    let step = 1.0 / grid as f64;
    let xs: Vec<f64> = (0..=grid).map(|k| k as f64 * step).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| eval(x)).collect::<Result<_>>()?;
    let table = SparseTable::new(&fs);

    let mut best = ModulusEstimate { value: 0.0, u: 0.0, v: 0.0 };
    let mut best_pair = (0usize, 0usize, false);
    for i in 0..=grid {
        let reach = reach_right(kind, t, xs[i]);
        // tiny slack so a reach landing exactly on a grid node keeps that node
        let jmax = (((reach * grid as f64) + 1e-9).floor() as usize).clamp(i, grid);
        let ((hi_val, hi_idx), (lo_val, lo_idx)) = table.query(i, jmax);
        let (val, j) =
            if hi_val - fs[i] >= fs[i] - lo_val { (hi_val - fs[i], hi_idx) } else { (fs[i] - lo_val, lo_idx) };
        if val > best.value {
            best = ModulusEstimate { value: val, u: xs[i], v: xs[j] };
            best_pair = (i, j, j == jmax);
        }
    }

    let (i, j, at_edge) = best_pair;
    if best.value > 0.0 {
        if at_edge {
            let lo = xs[i.saturating_sub(1)];
            let hi = xs[(i + 1).min(grid)];
            let obj = |u: f64| -> Result<f64> { Ok((eval(reach_right(kind, t, u))? - eval(u)?).abs()) };
            let (u, val) = golden_max(lo, hi, obj)?;
            if val > best.value {
                best = ModulusEstimate { value: val, u, v: reach_right(kind, t, u) };
            }
        } else {
            let u = best.u;
            let fu = eval(u)?;
            let lo = xs[j.saturating_sub(1)].max(u);
            let hi = xs[(j + 1).min(grid)].min(reach_right(kind, t, u));
            if hi > lo {
                let (v, val) = golden_max(lo, hi, |v| Ok((eval(v)? - fu).abs()))?;
                if val > best.value {
                    best = ModulusEstimate { value: val, u, v };
                }
            }
        }
    }
    Ok(best)
}

/// Golden-section search for a maximum on [lo, hi]; returns (argmax, max)
/// over every point it evaluated, endpoints included.
fn golden_max<F>(lo: f64, hi: f64, f: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut best = (a, f(a)?);
    let fb = f(b)?;
    if fb > best.1 {
        best = (b, fb);
    }
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_ITERS {
        if fc > best.1 {
            best = (c, fc);
        }
        if fd > best.1 {
            best = (d, fd);
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}

fn c_alpha_cache() -> &'static RwLock<HashMap<(u64, u64), f64>> {
    static CACHE: OnceLock<RwLock<HashMap<(u64, u64), f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// C_{α,n} = n ω²_φ(x^α, n^{-1/2}) for 1 < α < 2, computed numerically and memoized.
pub fn c_alpha_n(alpha: f64, n: u64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::OutOfRange(format!("C_(alpha,n) needs 1 < alpha < 2, got {alpha}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("C_(alpha,n) needs n >= 1".into()));
    }
    let key = (alpha.to_bits(), n);
    if let Some(&v) = c_alpha_cache().read().expect("cache lock").get(&key) {
        return Ok(v);
    }
    let t = 1.0 / (n as f64).sqrt();
    let value = n as f64 * omega_numeric(ModulusKind::Omega2Phi, &|x: f64| x.powf(alpha), t, DEFAULT_GRID)?;
    // the computation is deterministic, so whichever thread inserts first wins harmlessly
    c_alpha_cache().write().expect("cache lock").entry(key).or_insert(value);
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasBoundMode {
    /// (3/2) ω²(f, sqrt(Var)), needs Var <= 1/2.
    Pointwise,
    /// (5/2) ω²_φ(f, sqrt(Var)/φ(θ)), needs Var <= φ(θ)²/4.
    DitzianTotik,
}

/// Bias bound for a plug-in f(θ̂) with unbiased θ̂ of the given variance.
pub fn plugin_bias_bound(func: &Functional, variance: f64, mode: BiasBoundMode, theta: f64) -> Result<f64> {
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(Error::OutOfRange(format!("variance = {variance}")));
    }
    let (kind, t, factor) = match mode {
        BiasBoundMode::Pointwise => {
            if variance > 0.5 {
                return Err(Error::OutOfRange("pointwise bound needs Var <= 1/2".into()));
            }
            (ModulusKind::Omega2, variance.sqrt(), 1.5)
        }
        BiasBoundMode::DitzianTotik => {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(Error::OutOfRange(format!("theta = {theta} not in (0, 1)")));
            }
            let p = phi(theta);
            if variance > p * p / 4.0 {
                return Err(Error::OutOfRange("Ditzian-Totik bound needs Var <= phi(theta)^2/4".into()));
            }
            (ModulusKind::Omega2Phi, variance.sqrt() / p, 2.5)
        }
    };
    if t == 0.0 {
        return Ok(0.0);
    }
    let omega = match omega_closed(kind, func, t) {
        Ok(v) => v,
        Err(Error::NoClosedForm(_)) | Err(Error::OutOfRange(_)) => {
            omega_numeric(kind, &|x| func.value(x), t, DEFAULT_GRID)?
        }
        Err(e) => return Err(e),
    };
    Ok(factor * omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN4: f64 = 2.0 * LN_2;
    const GRID: usize = 100_000;

    fn entropy(x: f64) -> f64 {
        if x == 0.0 {
            0.0
        } else {
            -x * x.ln()
        }
    }

    #[test]
    fn closed_form_examples() {
        let v = omega_closed(ModulusKind::Omega2, &Functional::Entropy, 0.1).unwrap();
        assert!((v - 0.1386294).abs() < 1e-7);
        let v = omega_closed(ModulusKind::Omega2Phi, &Functional::Entropy, 0.5).unwrap();
        assert!((v - 0.25 * LN4 / 1.25).abs() < 1e-15);
        assert!((v - 0.2772589).abs() < 1e-7);
        let v = omega_closed(ModulusKind::Omega2, &Functional::Power(0.5), 0.25).unwrap();
        assert!((v - 0.2928932).abs() < 1e-7);
    }

    #[test]
    fn closed_form_rejections() {
        let e = omega_closed(ModulusKind::Omega2, &Functional::Entropy, 0.6);
        assert!(matches!(e, Err(Error::OutOfRange(_))));
        let e = omega_closed(ModulusKind::Omega2Phi, &Functional::Entropy, 1.5);
        assert!(matches!(e, Err(Error::OutOfRange(_))));
        for (kind, f) in [
            (ModulusKind::Omega2Phi, Functional::Power(1.5)),
            (ModulusKind::Omega2, Functional::Power(2.0)),
            (ModulusKind::Omega2, Functional::Power(3.5)),
            (ModulusKind::Omega2, Functional::custom("sq", |x| x * x)),
            (ModulusKind::Omega1, Functional::Entropy),
        ] {
            assert!(matches!(omega_closed(kind, &f, 0.1), Err(Error::NoClosedForm(_))), "{kind:?} {f:?}");
        }
    }

    #[test]
    fn numeric_matches_closed_entropy() {
        let v = omega_numeric(ModulusKind::Omega2, &entropy, 0.1, GRID).unwrap();
        assert!((v - 0.1 * LN4).abs() < 2e-4);
        assert!(v <= 0.1 * LN4 + 1e-12);
    }

    #[test]
    fn weighted_entropy_maximizer_is_left_endpoint() {
        for &t in &[0.05, 0.3, 0.9] {
            let e = omega_numeric_detail(ModulusKind::Omega2Phi, &entropy, t, GRID).unwrap();
            let v_star = 2.0 * t * t / (1.0 + t * t);
            assert!(e.u.abs() <= 1.0 / GRID as f64, "t={t} u={}", e.u);
            assert!((e.v - v_star).abs() <= 2.0 / GRID as f64, "t={t} v={} vs {v_star}", e.v);
        }
    }

    #[test]
    fn omega1_full_interval_for_monotone() {
        let f = |x: f64| x.powf(0.7);
        let v = omega_numeric(ModulusKind::Omega1, &f, 1.0, 2000).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let g = |x: f64| -(x * x);
        assert!((omega_numeric(ModulusKind::Omega1, &g, 1.0, 2000).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn omega1_known_values() {
        // x^α concave: sup at u = 0, v = t
        let v = omega_numeric(ModulusKind::Omega1, &|x: f64| x.powf(0.5), 0.2, 10_000).unwrap();
        assert!((v - 0.2f64.sqrt()).abs() < 1e-9);
        // entropy is steepest at 0
        let v = omega_numeric(ModulusKind::Omega1, &entropy, 0.1, 10_000).unwrap();
        assert!((v - entropy(0.1)).abs() < 1e-9, "{v}");
    }

    #[test]
    fn numeric_rejects_bad_input() {
        assert!(omega_numeric(ModulusKind::Omega2, &entropy, 0.1, 10).is_err());
        let bad = |x: f64| 1.0 / x;
        assert!(matches!(omega_numeric(ModulusKind::Omega2, &bad, 0.1, 1000), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn moduli_monotone_in_t() {
        let fs: Vec<Box<dyn Fn(f64) -> f64>> =
            vec![Box::new(entropy), Box::new(|x: f64| x.powf(0.4)), Box::new(|x: f64| x.powf(1.6))];
        for f in &fs {
            for kind in [ModulusKind::Omega1, ModulusKind::Omega2, ModulusKind::Omega1Phi, ModulusKind::Omega2Phi] {
                let mut prev = 0.0;
                for k in 1..=10 {
                    let t = k as f64 / 10.0;
                    let v = omega_numeric(kind, f.as_ref(), t, 4000).unwrap();
                    assert!(v >= prev - 1e-9, "{kind:?} t={t}: {v} < {prev}");
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn second_order_at_most_twice_first_order() {
        let fs: Vec<Box<dyn Fn(f64) -> f64>> =
            vec![Box::new(entropy), Box::new(|x: f64| x.powf(0.3)), Box::new(|x: f64| (6.0 * x).sin())];
        for f in &fs {
            for &t in &[0.01, 0.1, 0.3, 0.5] {
                let w1 = omega_numeric(ModulusKind::Omega1, f.as_ref(), t, 5000).unwrap();
                let w2 = omega_numeric(ModulusKind::Omega2, f.as_ref(), t, 5000).unwrap();
                assert!(w2 <= 2.0 * w1 + 1e-9, "t={t}: {w2} vs {w1}");
            }
        }
    }

    #[test]
    fn weighted_power_modulus_is_order_t_squared() {
        for &alpha in &[1.1, 1.5, 1.9] {
            let f = move |x: f64| x.powf(alpha);
            let ratios: Vec<f64> = [1e-3, 1e-2, 0.1, 0.3, 0.6, 1.0]
                .iter()
                .map(|&t| omega_numeric(ModulusKind::Omega2Phi, &f, t, 20_000).unwrap() / (t * t))
                .collect();
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            assert!(lo > 0.01 && hi < 10.0, "alpha={alpha}: {ratios:?}");
        }
    }

    #[test]
    fn c_alpha_examples() {
        for &n in &[1u64, 10, 100] {
            assert!(c_alpha_n(1.5, n).unwrap() > 0.0);
        }
        let coarse = c_alpha_n(1.5, 100).unwrap();
        let fine = 100.0 * omega_numeric(ModulusKind::Omega2Phi, &|x: f64| x.powf(1.5), 0.1, 4 * DEFAULT_GRID).unwrap();
        assert!(((coarse - fine) / fine).abs() < 1e-3);
        assert!(c_alpha_n(2.0, 10).is_err());
        assert!(c_alpha_n(1.5, 0).is_err());
        // cached value is returned unchanged
        assert_eq!(c_alpha_n(1.5, 100).unwrap(), coarse);
    }

    #[test]
    fn c_alpha_concurrent_access_is_consistent() {
        use rayon::prelude::*;
        let vals: Vec<f64> = (0..16).into_par_iter().map(|_| c_alpha_n(1.3, 77).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn plugin_bias_bound_entropy_forms() {
        let (theta, n) = (0.3, 400.0);
        let var = theta * (1.0 - theta) / n;
        let pw = plugin_bias_bound(&Functional::Entropy, var, BiasBoundMode::Pointwise, theta).unwrap();
        assert!((pw - 1.5 * LN4 * var.sqrt()).abs() < 1e-14);
        let dt = plugin_bias_bound(&Functional::Entropy, var, BiasBoundMode::DitzianTotik, theta).unwrap();
        assert!((dt - 2.5 * LN4 / n / (1.0 + 1.0 / n)).abs() < 1e-14);
    }

    #[test]
    fn ditzian_totik_beats_pointwise_at_centre() {
        let var = 0.25 / 100.0;
        let pw = plugin_bias_bound(&Functional::Entropy, var, BiasBoundMode::Pointwise, 0.5).unwrap();
        let dt = plugin_bias_bound(&Functional::Entropy, var, BiasBoundMode::DitzianTotik, 0.5).unwrap();
        assert!(dt < pw);
    }

    #[test]
    fn plugin_bias_bound_preconditions() {
        assert!(plugin_bias_bound(&Functional::Entropy, 0.6, BiasBoundMode::Pointwise, 0.5).is_err());
        assert!(plugin_bias_bound(&Functional::Entropy, 0.1, BiasBoundMode::DitzianTotik, 0.5).is_err());
        assert!(plugin_bias_bound(&Functional::Entropy, 0.01, BiasBoundMode::DitzianTotik, 1.0).is_err());
    }

    #[test]
    fn plugin_bias_bound_numeric_fallback() {
        let f = Functional::Power(1.5);
        let var = 0.2 * 0.8 / 50.0;
        let b = plugin_bias_bound(&f, var, BiasBoundMode::DitzianTotik, 0.2).unwrap();
        let t = var.sqrt() / phi(0.2);
        let expect = 2.5 * omega_numeric(ModulusKind::Omega2Phi, &|x: f64| x.powf(1.5), t, DEFAULT_GRID).unwrap();
        assert!((b - expect).abs() < 1e-15);
    }

    #[test]
    fn bernstein_norm_error_tracks_weighted_modulus() {
        use crate::bernstein::apply;
        for f in [Functional::Entropy, Functional::Power(0.5), Functional::Power(1.5)] {
            for n in [10u64, 40, 160] {
                let err = (1..400)
                    .map(|i| {
                        let x = i as f64 / 400.0;
                        (apply(&f, n, x).unwrap() - f.value(x)).abs()
                    })
                    .fold(0.0, f64::max);
                let w =
                    omega_numeric(ModulusKind::Omega2Phi, &|x| f.value(x), 1.0 / (n as f64).sqrt(), 20_000).unwrap();
                assert!(err <= 2.5 * w, "{f:?} n={n}: {err} > 2.5 * {w}");
                assert!(err >= 0.05 * w, "{f:?} n={n}: {err} << {w}");
            }
        }
    }
}
