//! Distributions, count vectors and the additive functionals F(P) = Σ f(p_i).

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on Σ p_i accepted by [`make_distribution`].
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over a finite alphabet of size `S = probs.len()`.
///
/// Structural zeros are kept and counted in `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    /// Number of symbols with strictly positive mass.
    pub fn nonzero_count(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("distribution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            probs: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        make_distribution(&raw.probs)
    }

    // Entries that are already validated and sum to one up to rounding.
    fn from_trusted(probs: Vec<f64>) -> Self {
        DiscreteDistribution { probs }
    }
}

/// Validates a probability vector and renormalizes it to sum to one.
pub fn make_distribution(probs: &[f64]) -> Result<DiscreteDistribution> {
    if probs.is_empty() {
        return Err(Error::EmptyVector);
    }
    for (index, &value) in probs.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::NegativeProbability { index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::SumNotOne { sum });
    }
    // rounding-level deviations are kept verbatim so serialized vectors round-trip
    if (sum - 1.0).abs() <= probs.len() as f64 * f64::EPSILON {
        return Ok(DiscreteDistribution::from_trusted(probs.to_vec()));
    }
    let mut out: Vec<f64> = probs.iter().map(|p| (p / sum).min(1.0)).collect();
    // push the residual rounding error onto the largest entry
    let residual = 1.0 - out.iter().sum::<f64>();
    if residual != 0.0 {
        let (imax, _) = out.iter().enumerate().fold((0, f64::MIN), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        out[imax] = (out[imax] + residual).clamp(0.0, 1.0);
    }
    Ok(DiscreteDistribution::from_trusted(out))
}

pub fn uniform(support: usize) -> Result<DiscreteDistribution> {
    if support == 0 {
        return Err(Error::InvalidArgument("uniform needs S >= 1".into()));
    }
    Ok(DiscreteDistribution::from_trusted(vec![1.0 / support as f64; support]))
}

/// S-1 masses at 1/n and the remainder on the last symbol.
pub fn worst_case_w(support: usize, n: u64) -> Result<DiscreteDistribution> {
    if support == 0 {
        return Err(Error::InvalidArgument("worst_case_w needs S >= 1".into()));
    }
    if n < support as u64 {
        return Err(Error::InvalidArgument(format!("worst_case_w needs n >= S, got S = {support}, n = {n}")));
    }
    let nf = n as f64;
    let mut probs = vec![1.0 / nf; support];
    probs[support - 1] = 1.0 - (support - 1) as f64 / nf;
    Ok(DiscreteDistribution::from_trusted(probs))
}

/// Uniform on min(S, n) symbols, padded with zeros up to S.
pub fn capped_uniform(support: usize, n: u64) -> Result<DiscreteDistribution> {
    if support == 0 || n == 0 {
        return Err(Error::InvalidArgument("capped_uniform needs S >= 1 and n >= 1".into()));
    }
    let k = (support as u64).min(n) as usize;
    let mut probs = vec![0.0; support];
    for p in probs.iter_mut().take(k) {
        *p = 1.0 / k as f64;
    }
    Ok(DiscreteDistribution::from_trusted(probs))
}

/// Multinomial counts X_1..X_S with sample size n.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountVector {
    counts: Vec<u64>,
    n: u64,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Self {
        let n = counts.iter().sum();
        CountVector { counts, n }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    /// Number of symbols observed at least once.
    pub fn observed_support(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Draws multinomial counts by sequential conditional binomials.
///
/// The same `(dist, n, seed)` gives the same counts on a given build.
pub fn sample_counts(dist: &DiscreteDistribution, n: u64, seed: u64) -> CountVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_counts_with(dist, n, &mut rng)
}

pub(crate) fn sample_counts_with<R: rand::Rng + ?Sized>(
    dist: &DiscreteDistribution,
    n: u64,
    rng: &mut R,
) -> CountVector {
    let probs = dist.probs();
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = n;
    let mut mass_left = 1.0f64;
    let last = probs.len() - 1;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == last {
            counts[i] = remaining;
            break;
        }
        let cond = if mass_left > 0.0 { (p / mass_left).clamp(0.0, 1.0) } else { 0.0 };
        let draw = if cond <= 0.0 {
            0
        } else if cond >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, cond).expect("valid binomial").sample(rng)
        };
        counts[i] = draw;
        remaining -= draw;
        mass_left -= p;
    }
    CountVector::new(counts)
}

/// Empirical distribution P_n(i) = X_i / n.
pub fn empirical(counts: &CountVector) -> Result<DiscreteDistribution> {
    if counts.n() == 0 {
        return Err(Error::InvalidArgument("empirical distribution needs n >= 1".into()));
    }
    if counts.support_size() == 0 {
        return Err(Error::EmptyVector);
    }
    let nf = counts.n() as f64;
    Ok(DiscreteDistribution::from_trusted(counts.counts().iter().map(|&c| c as f64 / nf).collect()))
}

/// Profile h_j = #{i : X_i = j} for j = 0..=n.
pub fn fingerprint(counts: &CountVector) -> Vec<u64> {
    let mut h = vec![0u64; counts.n() as usize + 1];
    for &c in counts.counts() {
        h[c as usize] += 1;
    }
    h
}

/// A user-supplied element-wise map, wrapped so that f(0) = 0 exactly.
#[derive(Clone)]
pub struct CustomFn {
    label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl CustomFn {
    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn").field("label", &self.label).finish()
    }
}

/// The element-wise map f of F(P) = Σ_i f(p_i).
#[derive(Debug, Clone)]
pub enum Functional {
    /// f(x) = -x ln x (nats).
    Entropy,
    /// f(x) = x^α, α > 0.
    Power(f64),
    Custom(CustomFn),
}

impl Functional {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::OutOfRange(format!("power functional needs alpha > 0, got {alpha}")));
        }
        Ok(Functional::Power(alpha))
    }

    pub fn custom<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Functional::Custom(CustomFn { label: label.into(), f: Arc::new(f) })
    }

    /// f(x), with 0 ln 0 = 0 and 0^α = 0.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        match self {
            Functional::Entropy => -x * x.ln(),
            Functional::Power(alpha) => x.powf(*alpha),
            Functional::Custom(c) => (c.f)(x),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            Functional::Power(a) => Some(*a),
            _ => None,
        }
    }

    /// Short tag such as `entropy` or `power:0.5`.
    pub fn tag(&self) -> String {
        match self {
            Functional::Entropy => "entropy".to_string(),
            Functional::Power(a) => format!("power:{a}"),
            Functional::Custom(c) => format!("custom:{}", c.label),
        }
    }

    /// Parses `entropy` or `power:<alpha>`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.eq_ignore_ascii_case("entropy") {
            return Ok(Functional::Entropy);
        }
        if let Some(rest) = t.strip_prefix("power:") {
            let alpha: f64 = rest.parse().map_err(|_| Error::Parse(format!("bad exponent in functional '{t}'")))?;
            return Functional::power(alpha);
        }
        Err(Error::Parse(format!("unknown functional '{t}' (expected entropy or power:<alpha>)")))
    }
}

/// F(P) = Σ_i f(p_i).
pub fn eval_functional(func: &Functional, dist: &DiscreteDistribution) -> Result<f64> {
    let mut total = 0.0;
    for &p in dist.probs() {
        let v = func.value(p);
        if !v.is_finite() {
            return Err(Error::NonFinite { x: p, value: v });
        }
        total += v;
    }
    Ok(total)
}

/// Parses a distribution spec: `uniform:S`, `w:S:n`, `capped:S:n`,
/// `file:path.json`, or an inline JSON object `{"probs": [...]}`.
pub fn parse_distribution(spec: &str) -> Result<DiscreteDistribution> {
    let s = spec.trim();
    if s.starts_with('{') {
        return DiscreteDistribution::from_json(s);
    }
    if let Some(path) = s.strip_prefix("file:") {
        return read_distribution_file(Path::new(path));
    }
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<u64> {
        parts
            .get(i)
            .ok_or_else(|| Error::Parse(format!("missing field {i} in distribution spec '{s}'")))?
            .parse::<u64>()
            .map_err(|_| Error::Parse(format!("bad integer in distribution spec '{s}'")))
    };
    match (parts[0], parts.len()) {
        ("uniform", 2) => uniform(num(1)? as usize),
        ("w", 3) => worst_case_w(num(1)? as usize, num(2)?),
        ("capped", 3) => capped_uniform(num(1)? as usize, num(2)?),
        _ => Err(Error::Parse(format!(
            "unknown distribution spec '{s}' (expected uniform:S, w:S:n, capped:S:n, file:path or JSON)"
        ))),
    }
}

pub fn read_distribution_file(path: &Path) -> Result<DiscreteDistribution> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    DiscreteDistribution::from_json(&text)
}
