//! Stochastic collapse and decoherence channels.
//!
//! Every model has two faces: a trajectory form (random projective events
//! applied to a pure state) and an ensemble form (deterministic damping of the
//! density-matrix coherences). The two agree in average.

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::quantum::{DensityMatrix, PureState};
use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CollapseKind {
    None,
    /// Phase damping at rate `gamma`.
    Dephasing {
        gamma: f64,
    },
    /// Poisson-distributed projective collapses at rate `lambda`.
    ProjectiveEvents {
        lambda: f64,
    },
    /// Scalar stand-in for a CSL-type rate: `lambda0 * mass_factor * sep_factor`.
    CslLike {
        lambda0: f64,
        mass_factor: f64,
        sep_factor: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseModel {
    #[serde(flatten)]
    pub kind: CollapseKind,
    /// Basis the collapse projects onto. `None` means the full labeled basis
    /// of whatever state the model is applied to (the which-path basis for
    /// two-arm states).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collapse_basis: Option<Vec<String>>,
}

impl Default for CollapseModel {
    fn default() -> Self {
        CollapseModel::none()
    }
}

fn non_negative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be a finite value >= 0, got {v}"),
        ))
    }
}

impl CollapseModel {
    pub fn none() -> Self {
        CollapseModel {
            kind: CollapseKind::None,
            collapse_basis: None,
        }
    }

    pub fn dephasing(gamma: f64) -> Result<Self> {
        Self::from_kind(CollapseKind::Dephasing { gamma })
    }

    pub fn projective(lambda: f64) -> Result<Self> {
        Self::from_kind(CollapseKind::ProjectiveEvents { lambda })
    }

    pub fn csl_like(lambda0: f64, mass_factor: f64, sep_factor: f64) -> Result<Self> {
        Self::from_kind(CollapseKind::CslLike {
            lambda0,
            mass_factor,
            sep_factor,
        })
    }

    pub fn from_kind(kind: CollapseKind) -> Result<Self> {
        let model = CollapseModel {
            kind,
            collapse_basis: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_basis<S: Into<String>>(mut self, basis: impl IntoIterator<Item = S>) -> Self {
        self.collapse_basis = Some(basis.into_iter().map(Into::into).collect());
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            CollapseKind::None => Ok(()),
            CollapseKind::Dephasing { gamma } => non_negative("gamma", gamma),
            CollapseKind::ProjectiveEvents { lambda } => non_negative("lambda", lambda),
            CollapseKind::CslLike {
                lambda0,
                mass_factor,
                sep_factor,
            } => {
                non_negative("csl_lambda0", lambda0)?;
                non_negative("csl_mass_factor", mass_factor)?;
                if !(0.0..=1.0).contains(&sep_factor) {
                    return Err(Error::param(
                        "csl_sep_factor",
                        format!("must lie in [0, 1], got {sep_factor}"),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Rate at which coherence in the collapse basis is destroyed.
    pub fn effective_rate(&self) -> f64 {
        match self.kind {
            CollapseKind::None => 0.0,
            CollapseKind::Dephasing { gamma } => gamma,
            CollapseKind::ProjectiveEvents { lambda } => lambda,
            CollapseKind::CslLike {
                lambda0,
                mass_factor,
                sep_factor,
            } => lambda0 * mass_factor * sep_factor,
        }
    }

    /// Rate of discrete projective events. Zero for `None` and `Dephasing`.
    pub fn event_rate(&self) -> f64 {
        match self.kind {
            CollapseKind::None | CollapseKind::Dephasing { .. } => 0.0,
            _ => self.effective_rate(),
        }
    }

    /// Probability that at least one collapse acts within `duration`:
    /// `1 − e^{−rate·duration}`.
    pub fn collapse_probability(&self, duration: f64) -> f64 {
        -(-self.effective_rate() * duration.max(0.0)).exp_m1()
    }

    /// Poisson event times on `[0, duration)`, ascending. Empty for kinds with
    /// no discrete events and for empty (or negative) intervals.
    pub fn sample_events(&self, duration: f64, rng: &mut RngStream) -> Vec<f64> {
        let rate = self.event_rate();
        if rate <= 0.0 || duration <= 0.0 {
            return Vec::new();
        }
        let gap = Exp::new(rate).expect("positive finite rate");
        let mut times = Vec::new();
        let mut t = gap.sample(rng);
        while t < duration {
            times.push(t);
            t += gap.sample(rng);
        }
        times
    }

    /// Times at which a trajectory gets projected. Dephasing is unraveled as
    /// "no jump, or one full projection at a uniform time" with the jump
    /// probability `1 − e^{−γ·duration}`, which reproduces the phase-damping
    /// channel exactly in average.
    pub fn trajectory_event_times(&self, duration: f64, rng: &mut RngStream) -> Vec<f64> {
        match self.kind {
            CollapseKind::Dephasing { .. } => {
                if duration > 0.0 && rng.bernoulli(self.collapse_probability(duration)) {
                    vec![rng.uniform() * duration]
                } else {
                    Vec::new()
                }
            }
            _ => self.sample_events(duration, rng),
        }
    }

    fn basis_for<'a>(&'a self, state_labels: &'a [String]) -> Vec<&'a str> {
        match &self.collapse_basis {
            Some(b) => b.iter().map(String::as_str).collect(),
            None => state_labels.iter().map(String::as_str).collect(),
        }
    }
}

/// A materialized collapse: when it happened and which basis state it picked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseEvent {
    pub time: f64,
    pub outcome: String,
}

/// Pure-state trajectory through `duration` under `model`. Returns the final
/// state and the logged events.
pub fn apply_model_trajectory(
    state: &PureState,
    model: &CollapseModel,
    duration: f64,
    rng: &mut RngStream,
) -> Result<(PureState, Vec<CollapseEvent>)> {
    let times = model.trajectory_event_times(duration, rng);
    let basis = model.basis_for(state.labels());
    let mut psi = state.clone();
    let mut events = Vec::with_capacity(times.len());
    for time in times {
        let (outcome, post) = psi.projective_measure(&basis, rng)?;
        psi = post;
        events.push(CollapseEvent { time, outcome });
    }
    Ok((psi, events))
}

/// Ensemble counterpart of [`apply_model_trajectory`]: coherences in the
/// collapse basis decay by `e^{−rate·duration}`.
pub fn apply_model_density(
    rho: &DensityMatrix,
    model: &CollapseModel,
    duration: f64,
) -> Result<DensityMatrix> {
    if duration.is_nan() || duration < 0.0 {
        return Err(Error::param(
            "duration",
            format!("must be >= 0, got {duration}"),
        ));
    }
    let basis = model.basis_for(rho.labels());
    rho.dephase(model.effective_rate() * duration, &basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::EnsembleAverage;
    use crate::C64;
    use std::f64::consts::LN_2;

    fn arms() -> PureState {
        PureState::normalized(
            ["armA", "armB"],
            vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn csl_rate_is_a_product() {
        let m = CollapseModel::csl_like(2.0, 3.0, 0.5).unwrap();
        assert_eq!(m.effective_rate(), 3.0);
        assert!(CollapseModel::csl_like(1.0, 1.0, 1.5).is_err());
        assert!(CollapseModel::projective(-1.0).is_err());
        assert!(CollapseModel::dephasing(f64::NAN).is_err());
    }

    #[test]
    fn no_events_without_rate() {
        let mut rng = RngStream::new(1, 0);
        assert!(CollapseModel::none()
            .sample_events(10.0, &mut rng)
            .is_empty());
        assert!(CollapseModel::dephasing(5.0)
            .unwrap()
            .sample_events(10.0, &mut rng)
            .is_empty());
        assert!(CollapseModel::projective(2.0)
            .unwrap()
            .sample_events(0.0, &mut rng)
            .is_empty());
    }

    #[test]
    fn events_sorted_inside_interval() {
        let mut rng = RngStream::new(2, 0);
        let m = CollapseModel::projective(50.0).unwrap();
        for _ in 0..100 {
            let t = m.sample_events(1.0, &mut rng);
            assert!(t.windows(2).all(|w| w[0] <= w[1]));
            assert!(t.iter().all(|&x| (0.0..1.0).contains(&x)));
        }
    }

    #[test]
    fn poisson_mean_and_variance() {
        // Poisson(2): SE of the mean = sqrt(2/n) ≈ 0.0045; SE of the sample
        // variance ≈ sqrt((μ + 2μ²)/n) ≈ 0.010
        let n = 100_000;
        let mut rng = RngStream::new(3, 0);
        let m = CollapseModel::projective(2.0).unwrap();
        let counts: Vec<f64> = (0..n)
            .map(|_| m.sample_events(1.0, &mut rng).len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
        assert!((mean - 2.0).abs() < 4.0 * (2.0 / n as f64).sqrt());
        assert!(
            (var - 2.0).abs() < 4.0 * ((2.0 + 2.0 * 4.0) / n as f64).sqrt(),
            "var {var}"
        );
    }

    #[test]
    fn none_model_leaves_state() {
        let mut rng = RngStream::new(4, 0);
        let (psi, events) =
            apply_model_trajectory(&arms(), &CollapseModel::none(), 3.0, &mut rng).unwrap();
        assert_eq!(psi, arms());
        assert!(events.is_empty());
    }

    #[test]
    fn many_events_give_born_statistics() {
        let n = 100_000;
        let mut rng = RngStream::new(5, 0);
        let m = CollapseModel::projective(10.0).unwrap();
        let mut a = 0usize;
        for _ in 0..n {
            let (psi, events) = apply_model_trajectory(&arms(), &m, 1.0, &mut rng).unwrap();
            if events.is_empty() {
                continue;
            }
            let pa = psi.probability("armA").unwrap();
            assert!(pa == 1.0 || pa == 0.0);
            // later events repeat the first outcome
            assert!(events.iter().all(|e| e.outcome == events[0].outcome));
            if pa == 1.0 {
                a += 1;
            }
        }
        let f = a as f64 / n as f64;
        assert!((f - 0.5).abs() < 0.005, "armA frequency {f}");
    }

    #[test]
    fn dephasing_jump_probability() {
        let n = 100_000;
        let mut rng = RngStream::new(6, 0);
        let m = CollapseModel::dephasing(LN_2).unwrap();
        let jumps = (0..n)
            .filter(|_| {
                !apply_model_trajectory(&arms(), &m, 1.0, &mut rng)
                    .unwrap()
                    .1
                    .is_empty()
            })
            .count();
        let f = jumps as f64 / n as f64;
        assert!((f - 0.5).abs() < 0.005, "jump frequency {f}");
    }

    #[test]
    fn density_examples() {
        let rho = DensityMatrix::from_pure(&arms());
        assert_eq!(
            apply_model_density(&rho, &CollapseModel::none(), 4.0).unwrap(),
            rho
        );
        let m = CollapseModel::projective(LN_2).unwrap();
        let halved = apply_model_density(&rho, &m, 1.0).unwrap();
        let ratio = halved.element("armA", "armB").unwrap() / rho.element("armA", "armB").unwrap();
        assert!((ratio - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(apply_model_density(&rho, &m, 0.0).unwrap(), rho);
    }

    #[test]
    fn coherence_monotone_in_duration() {
        let rho = DensityMatrix::from_pure(&arms());
        let m = CollapseModel::csl_like(1.0, 2.0, 0.3).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let c = apply_model_density(&rho, &m, 0.1 * k as f64)
                .unwrap()
                .element("armA", "armB")
                .unwrap()
                .norm();
            assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn custom_collapse_basis_is_checked() {
        let rho = DensityMatrix::from_pure(&arms());
        let m = CollapseModel::projective(1.0)
            .unwrap()
            .with_basis(["armA", "elsewhere"]);
        assert!(apply_model_density(&rho, &m, 1.0).is_err());
        let m = CollapseModel::projective(1.0)
            .unwrap()
            .with_basis(["armB", "armA"]);
        assert!(apply_model_density(&rho, &m, 1.0).is_ok());
    }

    #[test]
    fn trajectories_average_to_density() {
        let n = 20_000;
        let models = [
            CollapseModel::none(),
            CollapseModel::dephasing(0.7).unwrap(),
            CollapseModel::projective(0.7).unwrap(),
            CollapseModel::csl_like(1.4, 1.0, 0.5).unwrap(),
        ];
        for (k, m) in models.iter().enumerate() {
            let mut rng = RngStream::new(7, k as u64);
            let mut avg = EnsembleAverage::new();
            for _ in 0..n {
                avg.add(&apply_model_trajectory(&arms(), m, 1.0, &mut rng).unwrap().0)
                    .unwrap();
            }
            let exact = apply_model_density(&DensityMatrix::from_pure(&arms()), m, 1.0).unwrap();
            let d = avg.finish().unwrap().trace_distance(&exact).unwrap();
            assert!(d < 5.0 / (n as f64).sqrt(), "{:?}: {d}", m.kind);
        }
    }
}
