//! Plug-in (MLE) estimator and the Miller–Madow entropy correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fingerprint, CountVector, Functional};

/// Which estimator to apply to a count vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    PlugIn,
    /// H(P_n) + (S - 1)/(2n) with the true alphabet size S.
    MillerMadow {
        support: usize,
    },
    /// Convenience variant: S replaced by the number of observed symbols.
    /// Not the textbook correction; provided for comparison only.
    MillerMadowObserved,
}

impl EstimatorSpec {
    pub fn miller_madow(support: usize) -> Result<Self> {
        if support == 0 {
            return Err(Error::InvalidArgument("Miller-Madow needs S >= 1".into()));
        }
        Ok(EstimatorSpec::MillerMadow { support })
    }

    pub fn tag(&self) -> String {
        match self {
            EstimatorSpec::PlugIn => "mle".into(),
            EstimatorSpec::MillerMadow { support } => format!("miller-madow:{support}"),
            EstimatorSpec::MillerMadowObserved => "miller-madow-observed".into(),
        }
    }

    /// Rejects Miller–Madow for anything but entropy.
    pub fn check(&self, func: &Functional) -> Result<()> {
        match (self, func) {
            (EstimatorSpec::PlugIn, _) => Ok(()),
            (EstimatorSpec::MillerMadow { support: 0 }, _) => {
                Err(Error::InvalidArgument("Miller-Madow needs S >= 1".into()))
            }
            (_, Functional::Entropy) => Ok(()),
            _ => Err(Error::InvalidArgument("Miller-Madow correction applies to the entropy functional only".into())),
        }
    }

    /// Additive correction for a sample of size `n` with `observed` nonzero counts.
    pub(crate) fn offset(&self, n: u64, observed: usize) -> f64 {
        match self {
            EstimatorSpec::PlugIn => 0.0,
            EstimatorSpec::MillerMadow { support } => (*support as f64 - 1.0) / (2.0 * n as f64),
            EstimatorSpec::MillerMadowObserved => (observed.max(1) as f64 - 1.0) / (2.0 * n as f64),
        }
    }

    pub fn estimate(&self, func: &Functional, counts: &CountVector) -> Result<f64> {
        self.check(func)?;
        let base = plug_in(func, counts)?;
        Ok(base + self.offset(counts.n(), counts.observed_support()))
    }
}

/// F(P_n) = Σ_i f(X_i / n).
pub fn plug_in(func: &Functional, counts: &CountVector) -> Result<f64> {
    let n = counts.n();
    if n == 0 {
        return Err(Error::InvalidArgument("plug-in estimate needs n >= 1".into()));
    }
    let nf = n as f64;
    let mut total = 0.0;
    for &c in counts.counts() {
        if c > 0 {
            let v = func.value(c as f64 / nf);
            if !v.is_finite() {
                return Err(Error::NonFinite { x: c as f64 / nf, value: v });
            }
            total += v;
        }
    }
    Ok(total)
}

/// The same estimate through the profile: Σ_j f(j/n) h_j.
pub fn plug_in_fingerprint(func: &Functional, counts: &CountVector) -> Result<f64> {
    let n = counts.n();
    if n == 0 {
        return Err(Error::InvalidArgument("plug-in estimate needs n >= 1".into()));
    }
    let nf = n as f64;
    Ok(fingerprint(counts)
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &h)| h > 0)
        .map(|(j, &h)| func.value(j as f64 / nf) * h as f64)
        .sum())
}

/// H(P_n) + (S - 1)/(2n).
pub fn miller_madow(counts: &CountVector, support: usize) -> Result<f64> {
    EstimatorSpec::miller_madow(support)?.estimate(&Functional::Entropy, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn cv(c: &[u64]) -> CountVector {
        CountVector::new(c.to_vec())
    }

    #[test]
    fn plug_in_examples() {
        assert!((plug_in(&Functional::Entropy, &cv(&[1, 1])).unwrap() - LN_2).abs() < 1e-15);
        let p = plug_in(&Functional::Power(0.5), &cv(&[1, 1])).unwrap();
        assert!((p - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(plug_in(&Functional::Entropy, &cv(&[2, 0])).unwrap(), 0.0);
        assert!(plug_in(&Functional::Entropy, &cv(&[0, 0])).is_err());
    }

    #[test]
    fn miller_madow_examples() {
        let v = miller_madow(&cv(&[1, 1]), 2).unwrap();
        assert!((v - (LN_2 + 0.25)).abs() < 1e-15);
        assert!((v - 0.9431472).abs() < 1e-7);
        assert_eq!(miller_madow(&cv(&[9]), 1).unwrap(), 0.0);
        assert!(miller_madow(&cv(&[1, 1]), 0).is_err());
        let n = 1_000_000u64;
        let big = miller_madow(&cv(&[n / 2, n / 2]), 2).unwrap();
        assert!((big - LN_2 - 1.0 / (2.0 * n as f64)).abs() < 1e-12);
    }

    #[test]
    fn observed_variant_uses_nonzero_count() {
        let counts = cv(&[3, 0, 1, 0]);
        let v = EstimatorSpec::MillerMadowObserved.estimate(&Functional::Entropy, &counts).unwrap();
        let h = plug_in(&Functional::Entropy, &counts).unwrap();
        assert!((v - h - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn miller_madow_rejects_power() {
        let e = EstimatorSpec::MillerMadow { support: 2 };
        assert!(e.estimate(&Functional::Power(2.0), &cv(&[1, 1])).is_err());
    }

    proptest! {
        #[test]
        fn fingerprint_form_agrees(counts in prop::collection::vec(0u64..20, 1..50), alpha in 0.1f64..2.5) {
            let c = CountVector::new(counts);
            prop_assume!(c.n() >= 1 && c.n() <= 1000);
            for f in [Functional::Entropy, Functional::Power(alpha)] {
                let a = plug_in(&f, &c).unwrap();
                let b = plug_in_fingerprint(&f, &c).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }

        #[test]
        fn entropy_estimate_range(counts in prop::collection::vec(0u64..30, 1..40)) {
            let c = CountVector::new(counts);
            prop_assume!(c.n() >= 1);
            let h = plug_in(&Functional::Entropy, &c).unwrap();
            prop_assert!(h >= -1e-12);
            prop_assert!(h <= (c.observed_support() as f64).ln() + 1e-12);
            prop_assert!(h <= (c.support_size() as f64).ln() + 1e-12);
        }

        #[test]
        fn power_estimate_side_of_one(counts in prop::collection::vec(0u64..30, 1..40), alpha in 0.05f64..3.0) {
            let c = CountVector::new(counts);
            prop_assume!(c.n() >= 1 && (alpha - 1.0).abs() > 1e-3);
            let f = plug_in(&Functional::Power(alpha), &c).unwrap();
            if c.observed_support() == 1 {
                prop_assert!((f - 1.0).abs() < 1e-12);
            } else if alpha < 1.0 {
                prop_assert!(f > 1.0);
            } else {
                prop_assert!(f < 1.0);
            }
        }

        #[test]
        fn permutation_invariance(mut counts in prop::collection::vec(0u64..30, 2..30), k in 0usize..30) {
            let base = CountVector::new(counts.clone());
            prop_assume!(base.n() >= 1);
            let len = counts.len();
            counts.rotate_left(k % len);
            counts.swap(0, len - 1);
            let perm = CountVector::new(counts);
            let s = base.support_size();
            for est in [EstimatorSpec::PlugIn, EstimatorSpec::MillerMadow { support: s }] {
                let a = est.estimate(&Functional::Entropy, &base).unwrap();
                let b = est.estimate(&Functional::Entropy, &perm).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
