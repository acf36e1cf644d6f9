use mle_risk::bernstein::exact_bias;
use mle_risk::bounds::{lower_risk, upper_risk, LowerParams};
use mle_risk::estimators::EstimatorSpec;
use mle_risk::model::{parse_distribution, uniform, worst_case_w, Functional};
use mle_risk::risklab::{
    exact_moments, hybrid_moments, sweep, worst_case_search, SupportSpec, SweepConfig, SweepMethod,
};
use mle_risk::Error;

#[test]
fn shorthand_and_json_distributions_agree() {
    let a = parse_distribution("w:6:9").unwrap();
    let b = parse_distribution(&a.to_json()).unwrap();
    assert_eq!(a.probs(), b.probs());
    assert_eq!(a.probs(), worst_case_w(6, 9).unwrap().probs());
}

#[test]
fn enumeration_bias_matches_bernstein_bias() {
    for func in [Functional::Entropy, Functional::power(0.7).unwrap(), Functional::power(1.4).unwrap()] {
        let dist = worst_case_w(5, 7).unwrap();
        let r = exact_moments(&EstimatorSpec::PlugIn, &func, &dist, 7).unwrap();
        let b = exact_bias(&func, &dist, 7).unwrap().total;
        assert!((r.bias - b).abs() < 1e-12, "{}: {} vs {b}", func.tag(), r.bias);
    }
}

#[test]
fn hybrid_bias_is_exact_and_variance_close() {
    let dist = uniform(6).unwrap();
    let exact = exact_moments(&EstimatorSpec::PlugIn, &Functional::Entropy, &dist, 8).unwrap();
    let hybrid = hybrid_moments(&EstimatorSpec::PlugIn, &Functional::Entropy, &dist, 8, 40_000, 3).unwrap();
    assert!((exact.bias - hybrid.bias).abs() < 1e-12);
    let tol = hybrid.ci_halfwidth.unwrap() * 2.0;
    assert!((exact.variance - hybrid.variance).abs() < tol);
}

#[test]
fn worst_case_risk_sits_between_the_bounds() {
    for (func, s, n) in [(Functional::Entropy, 4, 60), (Functional::power(0.75).unwrap(), 5, 12)] {
        let (_, risk) = worst_case_search(&EstimatorSpec::PlugIn, &func, s, n).unwrap();
        let upper = upper_risk(&func, s, n).unwrap();
        let lower = lower_risk(&func, s, n, LowerParams::default());
        assert!(risk.mse <= upper.total, "{}: {} > {}", func.tag(), risk.mse, upper.total);
        if lower.valid {
            assert!(risk.mse >= lower.total);
        }
    }
}

#[test]
fn sweep_rows_follow_grid_order_and_report_errors_per_row() {
    let cfg = SweepConfig {
        functionals: vec!["entropy".into()],
        supports: vec![SupportSpec::Fixed(3), SupportSpec::SameAsN],
        ns: vec![4, 30],
        method: SweepMethod::Exact,
        cap: 1000,
        ..SweepConfig::default()
    };
    let rows = sweep(&cfg).unwrap();
    let grid: Vec<(usize, u64)> = rows.iter().map(|r| (r.s, r.n)).collect();
    assert_eq!(grid, vec![(3, 4), (3, 30), (4, 4), (30, 30)]);
    assert!(rows[0].error.is_none() && rows[0].mse.is_some());
    // C(59, 29) outcomes is far above the cap
    assert!(rows[3].error.as_deref().unwrap().contains("cap"));
}

#[test]
fn cap_error_carries_the_count() {
    let err = exact_moments(&EstimatorSpec::PlugIn, &Functional::Entropy, &uniform(30).unwrap(), 30).unwrap_err();
    assert!(matches!(err, Error::FeasibilityCapExceeded { cap: 10_000_000, .. }));
}
