//! End-to-end: simulate a trap, then recover the collapse rate from its leakage.

use suptrap_core::atom::{run_protocol, AtomTrapConfig};
use suptrap_core::collapse::CollapseModel;
use suptrap_core::inference::{binomial_mle, geometric_mle, EstimateOptions};
use suptrap_core::optical::{simulate_ensemble, OpticalTrapConfig};

#[test]
fn optical_escape_times_recover_the_rate() {
    let lambda = 0.08;
    let cfg =
        OpticalTrapConfig::new(CollapseModel::projective(lambda).unwrap(), 1.0, 200, 21).unwrap();
    let ensemble = simulate_ensemble(&cfg, 20_000).unwrap();
    let (escapes, censored) = ensemble.escape_samples();
    let options = EstimateOptions {
        cycle_duration: Some(1.0),
        ..Default::default()
    };
    let est = geometric_mle(&escapes, censored, 200, &options).unwrap();
    let p = cfg.collapse_probability();
    assert!(
        est.p_ci_low <= p && p <= est.p_ci_high,
        "{p} not in [{}, {}]",
        est.p_ci_low,
        est.p_ci_high
    );
    assert!(est.covers_lambda(lambda));

    // the pooled form of the same data agrees exactly with the censored fit
    let pooled = binomial_mle(&ensemble.to_leakage_series(), &options).unwrap();
    assert!((pooled.q_hat - est.q_hat).abs() < 1e-15);
}

#[test]
fn atom_leakage_recovers_the_rate() {
    let lambda = 0.05;
    let mut cfg =
        AtomTrapConfig::new(CollapseModel::projective(lambda).unwrap(), 1.0, 40, 22).unwrap();
    cfg.push_efficiency = 0.6;
    let series = run_protocol(&cfg, 50_000).unwrap();
    let est = binomial_mle(
        &series,
        &EstimateOptions {
            efficiency: 0.6,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(
        est.covers_lambda(lambda),
        "{lambda} not in [{:?}, {:?}]",
        est.lambda_ci_low,
        est.lambda_ci_high
    );
    assert!(est.warnings.is_empty());
}

#[test]
fn dephasing_and_projective_leak_identically() {
    let series = |model| {
        let cfg = AtomTrapConfig::new(model, 1.0, 30, 23).unwrap();
        run_protocol(&cfg, 40_000).unwrap()
    };
    let a = binomial_mle(
        &series(CollapseModel::dephasing(0.1).unwrap()),
        &EstimateOptions::default(),
    )
    .unwrap();
    let b = binomial_mle(
        &series(CollapseModel::projective(0.1).unwrap()),
        &EstimateOptions::default(),
    )
    .unwrap();
    let se = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
    assert!((a.q_hat - b.q_hat).abs() < 4.0 * se);
}
