//! Collapse-rate estimation from leakage records.
//!
//! Both estimators reduce to a Bernoulli likelihood `s·ln q + f·ln(1−q)`:
//! escape-cycle data contribute one success per escape and one failure per
//! cycle survived; pooled per-cycle counts contribute removals and
//! survivors directly. `q` is the per-cycle escape probability, `p = 2q/η`
//! the per-cycle collapse probability and `λ = −ln(1−p)/τ` the rate.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::atom::LeakageSeries;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    #[default]
    Wald,
    ProfileLikelihood,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub confidence: f64,
    pub method: IntervalMethod,
    /// Fraction of collapsed trials that can escape (push efficiency).
    pub efficiency: f64,
    /// Cycle or pass duration; when set, a continuous rate is reported.
    pub cycle_duration: Option<f64>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            confidence: 0.95,
            method: IntervalMethod::Wald,
            efficiency: 1.0,
            cycle_duration: None,
        }
    }
}

impl EstimateOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::param(
                "confidence",
                format!("must lie in (0, 1), got {}", self.confidence),
            ));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::param(
                "efficiency",
                format!("must lie in (0, 1], got {}", self.efficiency),
            ));
        }
        if let Some(tau) = self.cycle_duration {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::param(
                    "cycle_duration",
                    format!("must be > 0, got {tau}"),
                ));
            }
        }
        Ok(())
    }

    fn z(&self) -> f64 {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        normal.inverse_cdf(0.5 + self.confidence / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub q_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_hat: f64,
    pub p_ci_low: f64,
    pub p_ci_high: f64,
    /// `None` when no duration was given or the rate is unbounded.
    pub lambda_hat: Option<f64>,
    pub lambda_ci_low: Option<f64>,
    pub lambda_ci_high: Option<f64>,
    pub standard_error: f64,
    pub confidence: f64,
    pub method: IntervalMethod,
    pub efficiency: f64,
    pub log_likelihood: f64,
    pub n_samples: u64,
    pub warnings: Vec<String>,
}

impl RateEstimate {
    pub fn covers_q(&self, q: f64) -> bool {
        self.ci_low <= q && q <= self.ci_high
    }

    pub fn covers_lambda(&self, lambda: f64) -> bool {
        let lo = self.lambda_ci_low.unwrap_or(0.0);
        self.lambda_ci_high.is_none_or(|hi| lambda <= hi) && lo <= lambda
    }
}

/// `a·ln b` with `0·ln 0 = 0`.
fn xlogy(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * b.ln()
    }
}

fn bernoulli_loglik(s: f64, f: f64, q: f64) -> f64 {
    xlogy(s, q) + xlogy(f, 1.0 - q)
}

/// Root of the monotone `g` on `[lo, hi]`, given `g(lo)` and `g(hi)` of
/// opposite sign.
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    let rising = g(hi) > g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn profile_interval(s: f64, f: f64, q_hat: f64, z: f64) -> (f64, f64) {
    let peak = bernoulli_loglik(s, f, q_hat);
    let drop = |q: f64| 2.0 * (peak - bernoulli_loglik(s, f, q)) - z * z;
    // the deviance diverges at a boundary only if that boundary is excluded
    let lo = if s == 0.0 {
        0.0
    } else {
        bisect(0.0, q_hat, drop)
    };
    let hi = if f == 0.0 {
        1.0
    } else {
        bisect(q_hat, 1.0, drop)
    };
    (lo, hi)
}

/// Fit `s` successes against `f` failures and propagate to `p` and `λ`.
fn fit(s: u64, f: u64, n_samples: u64, options: &EstimateOptions) -> Result<RateEstimate> {
    options.validate()?;
    let (s, f) = (s as f64, f as f64);
    let trials = s + f;
    let q_hat = s / trials;
    let standard_error = (q_hat * (1.0 - q_hat) / trials).sqrt();
    let z = options.z();
    let (ci_low, ci_high) = match options.method {
        IntervalMethod::Wald => (
            (q_hat - z * standard_error).max(0.0),
            (q_hat + z * standard_error).min(1.0),
        ),
        IntervalMethod::ProfileLikelihood => profile_interval(s, f, q_hat, z),
    };

    let mut warnings = Vec::new();
    let eta = options.efficiency;
    let raw_p = 2.0 * q_hat / eta;
    let p_hat = raw_p.min(1.0);
    if raw_p > 1.0 {
        warnings.push(format!("p_hat clipped to 1 (2*q_hat/efficiency = {raw_p})"));
    }
    let p_ci_low = (2.0 * ci_low / eta).min(1.0);
    let p_ci_high = (2.0 * ci_high / eta).min(1.0);

    let (lambda_hat, lambda_ci_low, lambda_ci_high) = match options.cycle_duration {
        None => (None, None, None),
        Some(tau) => {
            let lam = rate_from_percycle(p_hat, tau).ok();
            if lam.is_none() {
                warnings.push("rate unbounded: p_hat = 1".to_string());
            }
            (
                lam,
                rate_from_percycle(p_ci_low, tau).ok(),
                rate_from_percycle(p_ci_high, tau).ok(),
            )
        }
    };

    Ok(RateEstimate {
        q_hat,
        ci_low,
        ci_high,
        p_hat,
        p_ci_low,
        p_ci_high,
        lambda_hat,
        lambda_ci_low,
        lambda_ci_high,
        standard_error,
        confidence: options.confidence,
        method: options.method,
        efficiency: eta,
        log_likelihood: bernoulli_loglik(s, f, q_hat),
        n_samples,
        warnings,
    })
}

/// Censored-geometric MLE from escape cycles (1-based) and the number of
/// trajectories still trapped after `max_cycle` cycles.
pub fn geometric_mle(
    escape_cycles: &[u64],
    n_censored: u64,
    max_cycle: u64,
    options: &EstimateOptions,
) -> Result<RateEstimate> {
    if escape_cycles.is_empty() {
        return Err(Error::NoEvents(if n_censored > 0 {
            "all trajectories censored".to_string()
        } else {
            "no escape samples".to_string()
        }));
    }
    if let Some(&k) = escape_cycles.iter().find(|&&k| k == 0 || k > max_cycle) {
        return Err(Error::param(
            "escape_cycles",
            format!("cycle {k} outside 1..={max_cycle}"),
        ));
    }
    let n = escape_cycles.len() as u64;
    let total: u64 = escape_cycles.iter().sum();
    let failures = total - n + n_censored * max_cycle;
    fit(n, failures, n + n_censored, options)
}

/// Pooled binomial MLE over all cycles: removals against the population at
/// risk at the start of each cycle.
pub fn binomial_mle(series: &LeakageSeries, options: &EstimateOptions) -> Result<RateEstimate> {
    series.check_bookkeeping()?;
    let at_risk: u64 = series.at_risk().sum();
    if at_risk == 0 {
        return Err(Error::NoEvents("zero population at risk".to_string()));
    }
    let removed = series.total_removed();
    let period = (series.period > 0.0).then_some(series.period);
    let options = EstimateOptions {
        cycle_duration: options.cycle_duration.or(period),
        ..*options
    };
    fit(removed, at_risk - removed, series.n_initial, &options)
}

/// `λ = −ln(1 − p)/τ`.
pub fn rate_from_percycle(p_hat: f64, cycle_duration: f64) -> Result<f64> {
    if !(cycle_duration > 0.0 && cycle_duration.is_finite()) {
        return Err(Error::param(
            "cycle_duration",
            format!("must be > 0, got {cycle_duration}"),
        ));
    }
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::param(
            "p_hat",
            format!("must lie in [0, 1), got {p_hat}"),
        ));
    }
    if p_hat == 1.0 {
        return Err(Error::RateUnbounded);
    }
    Ok(-(-p_hat).ln_1p() / cycle_duration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::CycleRecord;
    use crate::collapse::CollapseModel;
    use crate::rng::RngStream;
    use rand_distr::{Binomial, Distribution};

    fn geometric_sample(q: f64, rng: &mut RngStream) -> u64 {
        let u = 1.0 - rng.uniform();
        (u.ln() / (-q).ln_1p()).floor() as u64 + 1
    }

    fn censored_sample(q: f64, n: usize, max_cycle: u64, rng: &mut RngStream) -> (Vec<u64>, u64) {
        let mut escapes = Vec::with_capacity(n);
        let mut censored = 0;
        for _ in 0..n {
            let k = geometric_sample(q, rng);
            if k > max_cycle {
                censored += 1;
            } else {
                escapes.push(k);
            }
        }
        (escapes, censored)
    }

    /// Bisection on the score, the textbook route to the censored MLE.
    fn score_root(escapes: &[u64], censored: u64, max_cycle: u64) -> f64 {
        let n = escapes.len() as f64;
        let f =
            escapes.iter().map(|&k| (k - 1) as f64).sum::<f64>() + (censored * max_cycle) as f64;
        let score = |q: f64| n / q - f / (1.0 - q);
        bisect(1e-15, 1.0 - 1e-15, |q| -score(q))
    }

    fn synthetic_series(q: f64, n0: u64, cycles: usize, seed: u64) -> LeakageSeries {
        let mut rng = RngStream::new(seed, 0);
        let mut remaining = n0;
        let records = (1..=cycles)
            .map(|cycle| {
                let removed = Binomial::new(remaining, q).unwrap().sample(&mut rng);
                remaining -= removed;
                CycleRecord {
                    cycle,
                    n_removed: removed,
                    n_remaining: remaining,
                    n_collapse_events: 0,
                }
            })
            .collect();
        LeakageSeries {
            n_initial: n0,
            period: 1.0,
            seed,
            records,
        }
    }

    #[test]
    fn geometric_examples() {
        let o = EstimateOptions::default();
        let e = geometric_mle(&[1; 10], 0, 20, &o).unwrap();
        assert_eq!(e.q_hat, 1.0);
        assert!(e.ci_low <= e.q_hat && e.q_hat <= e.ci_high);
        assert_eq!(geometric_mle(&[2, 2, 2, 2], 0, 5, &o).unwrap().q_hat, 0.5);
        assert!(matches!(
            geometric_mle(&[], 0, 5, &o),
            Err(Error::NoEvents(_))
        ));
        assert!(matches!(
            geometric_mle(&[], 7, 5, &o),
            Err(Error::NoEvents(_))
        ));
        assert!(geometric_mle(&[0, 1], 0, 5, &o).is_err());
        assert!(geometric_mle(&[6], 0, 5, &o).is_err());
    }

    #[test]
    fn closed_form_matches_score_bisection() {
        let mut rng = RngStream::new(11, 0);
        for &(q, max_cycle) in &[(0.05, 10u64), (0.2, 3), (0.01, 50), (0.5, 2)] {
            let (escapes, censored) = censored_sample(q, 5_000, max_cycle, &mut rng);
            let closed = geometric_mle(&escapes, censored, max_cycle, &EstimateOptions::default())
                .unwrap()
                .q_hat;
            let root = score_root(&escapes, censored, max_cycle);
            assert!((closed - root).abs() < 1e-12, "{closed} vs {root}");
        }
    }

    #[test]
    fn geometric_recovers_truth_with_coverage() {
        let q = 0.05;
        let reps = 500;
        let mut covered = 0;
        for seed in 0..reps {
            let mut rng = RngStream::new(1_000 + seed, 0);
            let (escapes, censored) = censored_sample(q, 10_000, 40, &mut rng);
            let e = geometric_mle(&escapes, censored, 40, &EstimateOptions::default()).unwrap();
            assert!((e.q_hat - q).abs() < 3.0 * (e.ci_high - e.ci_low) / 2.0);
            covered += e.covers_q(q) as u32;
        }
        let rate = covered as f64 / reps as f64;
        assert!((0.92..=0.98).contains(&rate), "coverage {rate}");
    }

    #[test]
    fn coverage_across_rates() {
        for (i, &q) in [0.01, 0.05, 0.2].iter().enumerate() {
            for method in [IntervalMethod::Wald, IntervalMethod::ProfileLikelihood] {
                let o = EstimateOptions {
                    method,
                    ..Default::default()
                };
                let reps = 300;
                let mut covered = 0;
                for seed in 0..reps {
                    let mut rng = RngStream::new(50_000 * (i as u64 + 1) + seed, 0);
                    let (escapes, censored) = censored_sample(q, 2_000, 30, &mut rng);
                    covered += geometric_mle(&escapes, censored, 30, &o)
                        .unwrap()
                        .covers_q(q) as u32;
                }
                let rate = covered as f64 / reps as f64;
                assert!(
                    (0.92..=0.98).contains(&rate),
                    "q={q} {method:?}: coverage {rate}"
                );
            }
        }
    }

    #[test]
    fn consistency_at_large_samples() {
        let q = 0.05;
        let seeds = 100;
        let mut within = 0;
        for seed in 0..seeds {
            let mut rng = RngStream::new(9_000 + seed, 0);
            let (escapes, censored) = censored_sample(q, 1_000_000, 60, &mut rng);
            let e = geometric_mle(&escapes, censored, 60, &EstimateOptions::default()).unwrap();
            within += ((e.q_hat - q).abs() < 3.0 * e.standard_error) as u32;
        }
        assert!(within >= 99, "{within}/{seeds}");
    }

    #[test]
    fn profile_interval_contains_estimate_and_respects_boundaries() {
        let o = EstimateOptions {
            method: IntervalMethod::ProfileLikelihood,
            ..Default::default()
        };
        let e = geometric_mle(&[1, 1, 1], 0, 10, &o).unwrap();
        assert_eq!(e.ci_high, 1.0);
        assert!(e.ci_low > 0.0 && e.ci_low < 1.0);
        let e = geometric_mle(&[3, 7, 1, 12], 2, 12, &o).unwrap();
        assert!(e.ci_low < e.q_hat && e.q_hat < e.ci_high);
        // the deviance at each endpoint equals z²
        let z2 = 1.959963984540054f64.powi(2);
        let (s, f) = (4.0, (3 + 7 + 1 + 12 - 4 + 24) as f64);
        for q in [e.ci_low, e.ci_high] {
            let dev = 2.0 * (e.log_likelihood - bernoulli_loglik(s, f, q));
            assert!((dev - z2).abs() < 1e-9);
        }
    }

    #[test]
    fn binomial_examples() {
        let o = EstimateOptions::default();
        let zero = synthetic_series(0.0, 1_000, 10, 1);
        let e = binomial_mle(&zero, &o).unwrap();
        assert_eq!((e.q_hat, e.p_hat), (0.0, 0.0));
        assert_eq!(e.lambda_hat, Some(0.0));

        let empty = LeakageSeries {
            n_initial: 0,
            period: 1.0,
            seed: 0,
            records: vec![],
        };
        assert!(binomial_mle(&empty, &o).is_err());

        let data = synthetic_series(0.05, 100_000, 50, 2);
        let full = binomial_mle(&data, &o).unwrap();
        let half = binomial_mle(
            &data,
            &EstimateOptions {
                efficiency: 0.5,
                ..o
            },
        )
        .unwrap();
        assert_eq!(full.q_hat, half.q_hat);
        assert!((half.p_hat - 2.0 * full.p_hat).abs() < 1e-15);
    }

    #[test]
    fn binomial_clips_with_warning() {
        let data = synthetic_series(0.4, 1_000, 3, 3);
        let e = binomial_mle(
            &data,
            &EstimateOptions {
                efficiency: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(e.p_hat, 1.0);
        assert!(e.lambda_hat.is_none());
        assert!(e.warnings.iter().any(|w| w.contains("clipped")));
    }

    #[test]
    fn binomial_coverage() {
        let q = 0.05;
        let reps = 300;
        let covered = (0..reps)
            .filter(|&s| {
                let e = binomial_mle(
                    &synthetic_series(q, 100_000, 50, 500 + s),
                    &EstimateOptions::default(),
                )
                .unwrap();
                e.covers_q(q)
            })
            .count();
        let rate = covered as f64 / reps as f64;
        assert!((0.92..=0.98).contains(&rate), "coverage {rate}");
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_from_percycle(0.0, 1.0).unwrap(), 0.0);
        assert!((rate_from_percycle(1.0 - (-2.0f64).exp(), 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(
            rate_from_percycle(1.0, 1.0),
            Err(Error::RateUnbounded)
        ));
        assert!(rate_from_percycle(0.5, 0.0).is_err());
        for lambda in [1e-4, 0.05, 0.7, 3.0] {
            // 1 − p loses relative precision as e^{λτ}·ε, so stay at λτ ≤ 5
            for tau in [0.01, 1.0, 5.0].into_iter().filter(|t| lambda * t <= 5.0) {
                let p = CollapseModel::projective(lambda)
                    .unwrap()
                    .collapse_probability(tau);
                let back = rate_from_percycle(p, tau).unwrap();
                assert!(
                    (back - lambda).abs() < 1e-12 * lambda.max(1.0),
                    "{lambda} {tau} {back}"
                );
            }
        }
    }

    #[test]
    fn option_validation() {
        let bad = EstimateOptions {
            confidence: 1.0,
            ..Default::default()
        };
        assert!(geometric_mle(&[1], 0, 1, &bad).is_err());
        let bad = EstimateOptions {
            efficiency: 0.0,
            ..Default::default()
        };
        assert!(geometric_mle(&[1], 0, 1, &bad).is_err());
    }
}
