//! Recirculating Mach–Zehnder photon trap.
//!
//! A photon enters through `BS1`, travels both arms, and recombines on `BS2`.
//! With matched arms the detector port of `BS2` is dark, so the photon goes
//! back to the mirror and (through an ideal one-way element) re-enters `BS1`
//! unchanged. A which-path collapse in the arms spoils the interference and
//! gives the photon even odds of leaving through the detector port.
//!
//! Two-mode convention: the field has modes `armA`/`armB`. Between the beam
//! splitters these are the arms; before `BS1` mode `armA` is the input port;
//! after `BS2` mode `armA` is the detector port and `armB` the return port.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atom::{CycleRecord, LeakageSeries};
use crate::collapse::{CollapseEvent, CollapseModel};
use crate::quantum::{beam_splitter, phase_shift, to_dynamic, PureState, Spinor};
use crate::rng::RngStream;
use crate::{Error, Result, C64};

pub const ARMS: [&str; 2] = ["armA", "armB"];
const DETECTOR_PORT: usize = 0;
/// Inverted trap: with `arm_phase = π` every coherent photon exits.
pub const INVERTED_PHASE: f64 = PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticalTrapConfig {
    pub model: CollapseModel,
    /// Time per round trip; converts the model's rate into a per-pass probability.
    pub pass_duration: f64,
    pub max_passes: usize,
    /// Relative phase of `armB`; zero keeps the detector port dark.
    #[serde(default)]
    pub arm_phase: f64,
    /// Absorb the half of a collapsed photon that heads back to the mirror
    /// instead of recirculating it as a fresh input.
    #[serde(default)]
    pub absorb_returning_collapsed: bool,
    pub seed: u64,
}

impl OpticalTrapConfig {
    pub fn new(
        model: CollapseModel,
        pass_duration: f64,
        max_passes: usize,
        seed: u64,
    ) -> Result<Self> {
        let c = OpticalTrapConfig {
            model,
            pass_duration,
            max_passes,
            arm_phase: 0.0,
            absorb_returning_collapsed: false,
            seed,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.pass_duration > 0.0 && self.pass_duration.is_finite()) {
            return Err(Error::param(
                "pass_duration",
                format!("must be > 0, got {}", self.pass_duration),
            ));
        }
        if self.max_passes < 1 {
            return Err(Error::param("max_passes", "must be >= 1"));
        }
        if !self.arm_phase.is_finite() {
            return Err(Error::param("arm_phase", "must be finite"));
        }
        Ok(())
    }

    /// Probability that a collapse acts during one pass.
    pub fn collapse_probability(&self) -> f64 {
        self.model.collapse_probability(self.pass_duration)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detector {
    D1,
    D2,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PassRecord {
    /// 1-based.
    pub pass: usize,
    pub escaped: bool,
    /// Set exactly when `escaped`.
    pub detector: Option<Detector>,
    /// Lost at the mirror (only with `absorb_returning_collapsed`).
    pub absorbed: bool,
    pub events: Vec<CollapseEvent>,
}

/// Field amplitudes after one ideal pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Roundtrip {
    pub detector: C64,
    pub recirculated: C64,
}

impl Roundtrip {
    pub fn detector_probability(&self) -> f64 {
        self.detector.norm_sqr()
    }

    /// State presented to `BS1` on the next pass: the recirculated amplitude in
    /// the input port, unnormalized.
    pub fn trapped_state(&self) -> PureState {
        PureState::new(ARMS, vec![self.recirculated, C64::new(0.0, 0.0)]).expect("fixed labels")
    }
}

/// `BS1 → arm phase → BS2` with no collapse.
pub fn ideal_roundtrip(state: &PureState, arm_phase: f64) -> Result<Roundtrip> {
    let bs = to_dynamic(&beam_splitter());
    let out = state
        .apply_unitary(&bs, &ARMS)?
        .apply_unitary(&to_dynamic(&phase_shift(arm_phase)), &ARMS)?
        .apply_unitary(&bs, &ARMS)?;
    Ok(Roundtrip {
        detector: out.amplitude(ARMS[DETECTOR_PORT])?,
        recirculated: out.amplitude(ARMS[1 - DETECTOR_PORT])?,
    })
}

/// Detector-port probability of the ideal pass, `sin²(φ/2)`.
pub fn interference_law(arm_phase: f64) -> f64 {
    (arm_phase / 2.0).sin().powi(2)
}

/// Follows one photon pass by pass until it escapes, is absorbed, or reaches
/// `max_passes`. Collapsed photons that return to the mirror re-enter as a
/// fresh input-port state.
pub fn simulate_photon(config: &OpticalTrapConfig, rng: &mut RngStream) -> Vec<PassRecord> {
    let bs = beam_splitter();
    let arm_phase = phase_shift(config.arm_phase);
    let mut records = Vec::new();
    for pass in 1..=config.max_passes {
        let mut field = Spinor::basis(0);
        field.apply(&bs);
        field.apply(&arm_phase);
        let times = config
            .model
            .trajectory_event_times(config.pass_duration, rng);
        let events: Vec<CollapseEvent> = times
            .into_iter()
            .map(|time| CollapseEvent {
                time,
                outcome: ARMS[field.measure(rng)].to_string(),
            })
            .collect();
        let collapsed = !events.is_empty();
        field.apply(&bs);
        let port = field.measure(rng);
        let mut record = PassRecord {
            pass,
            escaped: false,
            detector: None,
            absorbed: false,
            events,
        };
        if port == DETECTOR_PORT {
            record.escaped = true;
            record.detector = Some(if rng.bernoulli(0.5) {
                Detector::D1
            } else {
                Detector::D2
            });
        } else if collapsed && config.absorb_returning_collapsed {
            record.absorbed = true;
        }
        let done = record.escaped || record.absorbed;
        records.push(record);
        if done {
            break;
        }
    }
    records
}

/// One CSV row of the ensemble run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpticalPassRow {
    pub pass: usize,
    pub escapes_d1: u64,
    pub escapes_d2: u64,
    /// Photons still circulating after this pass.
    pub survivors: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpticalEnsemble {
    pub n_photons: u64,
    pub rows: Vec<OpticalPassRow>,
    pub absorbed: Vec<u64>,
    pub collapse_events: Vec<u64>,
    pub pass_duration: f64,
    pub seed: u64,
}

impl OpticalEnsemble {
    pub fn total_escapes(&self) -> u64 {
        self.rows.iter().map(|r| r.escapes_d1 + r.escapes_d2).sum()
    }

    pub fn total_absorbed(&self) -> u64 {
        self.absorbed.iter().sum()
    }

    pub fn survivors(&self) -> u64 {
        self.rows.last().map_or(self.n_photons, |r| r.survivors)
    }

    /// Escape passes, one entry per escaped photon, plus the number still
    /// trapped after the last pass.
    pub fn escape_samples(&self) -> (Vec<u64>, u64) {
        let mut passes = Vec::with_capacity(self.total_escapes() as usize);
        for r in &self.rows {
            passes.extend(std::iter::repeat_n(
                r.pass as u64,
                (r.escapes_d1 + r.escapes_d2) as usize,
            ));
        }
        (passes, self.survivors())
    }

    /// Per-pass removal series (escapes and absorptions both leave the trap).
    pub fn to_leakage_series(&self) -> LeakageSeries {
        let records = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| CycleRecord {
                cycle: r.pass,
                n_removed: r.escapes_d1 + r.escapes_d2 + self.absorbed[i],
                n_remaining: r.survivors,
                n_collapse_events: self.collapse_events[i],
            })
            .collect();
        LeakageSeries {
            n_initial: self.n_photons,
            period: self.pass_duration,
            seed: self.seed,
            records,
        }
    }
}

#[derive(Clone, Debug, Default)]
struct Tally {
    d1: Vec<u64>,
    d2: Vec<u64>,
    absorbed: Vec<u64>,
    events: Vec<u64>,
}

impl Tally {
    fn new(n: usize) -> Self {
        Tally {
            d1: vec![0; n],
            d2: vec![0; n],
            absorbed: vec![0; n],
            events: vec![0; n],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (v, o) in [
            (&mut self.d1, &other.d1),
            (&mut self.d2, &other.d2),
            (&mut self.absorbed, &other.absorbed),
            (&mut self.events, &other.events),
        ] {
            v.iter_mut().zip(o).for_each(|(a, b)| *a += b);
        }
        self
    }
}

/// Runs `n_photons` independent photons; photon `i` draws from stream `i` of
/// the configured seed, so the histogram does not depend on scheduling.
pub fn simulate_ensemble(config: &OpticalTrapConfig, n_photons: u64) -> Result<OpticalEnsemble> {
    config.validate()?;
    if n_photons < 1 {
        return Err(Error::param("n_photons", "must be >= 1"));
    }
    let n = config.max_passes;
    let tally = (0..n_photons)
        .into_par_iter()
        .fold(
            || Tally::new(n),
            |mut t, i| {
                let mut rng = RngStream::new(config.seed, i);
                for rec in simulate_photon(config, &mut rng) {
                    let k = rec.pass - 1;
                    t.events[k] += rec.events.len() as u64;
                    match rec.detector {
                        Some(Detector::D1) => t.d1[k] += 1,
                        Some(Detector::D2) => t.d2[k] += 1,
                        None if rec.absorbed => t.absorbed[k] += 1,
                        None => {}
                    }
                }
                t
            },
        )
        .reduce(|| Tally::new(n), Tally::merge);

    let mut remaining = n_photons;
    let rows = (0..n)
        .map(|k| {
            remaining -= tally.d1[k] + tally.d2[k] + tally.absorbed[k];
            OpticalPassRow {
                pass: k + 1,
                escapes_d1: tally.d1[k],
                escapes_d2: tally.d2[k],
                survivors: remaining,
            }
        })
        .collect();
    Ok(OpticalEnsemble {
        n_photons,
        rows,
        absorbed: tally.absorbed,
        collapse_events: tally.events,
        pass_duration: config.pass_duration,
        seed: config.seed,
    })
}
