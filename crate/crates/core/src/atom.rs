//! Two-level atom interferometer trap.
//!
//! Each cycle is a `π/2 – free – π – free – π/2` Mach–Zehnder sequence whose
//! closing pulse phase is chosen so that a coherent atom always ends in `e`.
//! A collapse during free evolution leaves the atom 50:50 between `g` and `e`
//! after the closing pulse. At the end of every cycle the atom is branched in
//! `{g, e}` and a state-selective push removes `g` atoms with probability `η`.
//! Atoms left in `e` are pure again and start the next cycle like any other.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::{apply_model_density, CollapseEvent, CollapseModel};
use crate::quantum::{
    phase_shift, rotation_matrix, to_dynamic, DensityMatrix, PureState, Spinor, TwoLevelRotation,
};
use crate::rng::RngStream;
use crate::{Error, Result};

/// `g` is the ground state, `e` the long-lived excited clock state.
pub const LEVELS: [&str; 2] = ["g", "e"];
const G: usize = 0;
const E: usize = 1;

fn probability(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::param(name, format!("must lie in [0, 1], got {v}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomTrapConfig {
    pub model: CollapseModel,
    /// Total free-evolution time per cycle, split evenly around the π pulse.
    pub cycle_duration: f64,
    pub n_cycles: usize,
    /// Probability that a `g` atom is actually removed by the push.
    pub push_efficiency: f64,
    /// Probability that each pulse acts; otherwise it does nothing.
    pub pulse_fidelity: f64,
    /// Probability that the push also removes an `e` atom.
    #[serde(default)]
    pub excited_loss: f64,
    /// Relative phase picked up by `e` during the first free period.
    #[serde(default)]
    pub arm_phase: f64,
    pub seed: u64,
}

impl AtomTrapConfig {
    /// Ideal pulses and push, no excited-state loss.
    pub fn new(
        model: CollapseModel,
        cycle_duration: f64,
        n_cycles: usize,
        seed: u64,
    ) -> Result<Self> {
        let c = AtomTrapConfig {
            model,
            cycle_duration,
            n_cycles,
            push_efficiency: 1.0,
            pulse_fidelity: 1.0,
            excited_loss: 0.0,
            arm_phase: 0.0,
            seed,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.cycle_duration >= 0.0 && self.cycle_duration.is_finite()) {
            return Err(Error::param(
                "cycle_duration",
                format!("must be >= 0, got {}", self.cycle_duration),
            ));
        }
        if self.n_cycles < 1 {
            return Err(Error::param("n_cycles", "must be >= 1"));
        }
        probability("push_efficiency", self.push_efficiency)?;
        probability("pulse_fidelity", self.pulse_fidelity)?;
        probability("excited_loss", self.excited_loss)?;
        if !self.arm_phase.is_finite() {
            return Err(Error::param("arm_phase", "must be finite"));
        }
        Ok(())
    }

    /// Probability that a collapse acts at some point during one cycle.
    pub fn collapse_probability(&self) -> f64 {
        self.model.collapse_probability(self.cycle_duration)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AtomStatus {
    Trapped,
    Removed,
    Survived,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomState {
    pub internal: PureState,
    pub status: AtomStatus,
}

impl AtomState {
    pub fn ground() -> Self {
        AtomState {
            internal: PureState::basis(LEVELS, "g").expect("fixed labels"),
            status: AtomStatus::Trapped,
        }
    }

    pub fn excited() -> Self {
        AtomState {
            internal: PureState::basis(LEVELS, "e").expect("fixed labels"),
            status: AtomStatus::Trapped,
        }
    }

    fn spinor(&self) -> Result<Spinor> {
        if self.internal.labels().iter().map(String::as_str).ne(LEVELS) {
            return Err(Error::UnknownLabel(self.internal.labels().join(",")));
        }
        let a = self.internal.amplitudes();
        Ok(Spinor([a[G], a[E]]))
    }
}

/// Closing-pulse phase: π maps a coherent `g` start onto `e`, 0 keeps an `e`
/// start in `e`.
fn closing_phase(start: &Spinor) -> f64 {
    if start.probability(G) >= start.probability(E) {
        PI
    } else {
        0.0
    }
}

struct Pulses {
    open: nalgebra::Matrix2<crate::C64>,
    mirror: nalgebra::Matrix2<crate::C64>,
    close_from_g: nalgebra::Matrix2<crate::C64>,
    close_from_e: nalgebra::Matrix2<crate::C64>,
    arm_phase: nalgebra::Matrix2<crate::C64>,
}

impl Pulses {
    fn new(config: &AtomTrapConfig) -> Self {
        Pulses {
            open: rotation_matrix(TwoLevelRotation::half_pi(0.0)),
            mirror: rotation_matrix(TwoLevelRotation::pi(0.0)),
            close_from_g: rotation_matrix(TwoLevelRotation::half_pi(PI)),
            close_from_e: rotation_matrix(TwoLevelRotation::half_pi(0.0)),
            arm_phase: phase_shift(config.arm_phase),
        }
    }
}

fn pulse(s: &mut Spinor, m: &nalgebra::Matrix2<crate::C64>, fidelity: f64, rng: &mut RngStream) {
    if fidelity >= 1.0 || rng.bernoulli(fidelity) {
        s.apply(m);
    }
}

fn free_evolution(
    s: &mut Spinor,
    model: &CollapseModel,
    offset: f64,
    duration: f64,
    rng: &mut RngStream,
    mut log: impl FnMut(f64, usize),
) {
    for t in model.trajectory_event_times(duration, rng) {
        let k = s.measure(rng);
        log(offset + t, k);
    }
}

/// One interferometer cycle on raw amplitudes. Returns the number of collapse
/// events; `log` sees each event's time and outcome index.
fn run_cycle(
    s: &mut Spinor,
    config: &AtomTrapConfig,
    pulses: &Pulses,
    rng: &mut RngStream,
    mut log: impl FnMut(f64, usize),
) -> usize {
    let close = if closing_phase(s) == PI {
        &pulses.close_from_g
    } else {
        &pulses.close_from_e
    };
    let half = config.cycle_duration / 2.0;
    let mut count = 0;
    pulse(s, &pulses.open, config.pulse_fidelity, rng);
    if config.arm_phase != 0.0 {
        s.apply(&pulses.arm_phase);
    }
    free_evolution(s, &config.model, 0.0, half, rng, |t, k| {
        count += 1;
        log(t, k)
    });
    pulse(s, &pulses.mirror, config.pulse_fidelity, rng);
    free_evolution(s, &config.model, half, half, rng, |t, k| {
        count += 1;
        log(t, k)
    });
    pulse(s, close, config.pulse_fidelity, rng);
    count
}

/// One Mach–Zehnder cycle on a trapped atom: `π/2`, free evolution under the
/// collapse model (collapse basis `{g, e}`), `π`, free evolution, closing `π/2`.
pub fn mz_cycle(
    atom: &AtomState,
    config: &AtomTrapConfig,
    rng: &mut RngStream,
) -> Result<(AtomState, Vec<CollapseEvent>)> {
    if atom.status != AtomStatus::Trapped {
        return Err(Error::param(
            "atom",
            "only trapped atoms take part in a cycle",
        ));
    }
    let mut s = atom.spinor()?;
    let mut events = Vec::new();
    run_cycle(&mut s, config, &Pulses::new(config), rng, |time, k| {
        events.push(CollapseEvent {
            time,
            outcome: LEVELS[k].to_string(),
        })
    });
    Ok((
        AtomState {
            internal: s.to_state(&LEVELS),
            status: AtomStatus::Trapped,
        },
        events,
    ))
}

/// Branches every trapped atom in `{g, e}` (the push is measurement-like).
pub fn branch(ensemble: &mut [AtomState], rng: &mut RngStream) -> Result<()> {
    for atom in ensemble
        .iter_mut()
        .filter(|a| a.status == AtomStatus::Trapped)
    {
        let (_, post) = atom.internal.projective_measure(&LEVELS, rng)?;
        atom.internal = post;
    }
    Ok(())
}

/// State-selective push: each trapped atom found in `g` is removed with
/// probability `efficiency`; `e` atoms are left alone.
pub fn push_pulse(
    ensemble: &mut [AtomState],
    efficiency: f64,
    rng: &mut RngStream,
) -> Result<usize> {
    probability("push_efficiency", efficiency)?;
    let mut removed = 0;
    for atom in ensemble
        .iter_mut()
        .filter(|a| a.status == AtomStatus::Trapped)
    {
        if atom.internal.probability("g")? > 0.5 && rng.bernoulli(efficiency) {
            atom.status = AtomStatus::Removed;
            removed += 1;
        }
    }
    Ok(removed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    /// 1-based.
    pub cycle: usize,
    pub n_removed: u64,
    pub n_remaining: u64,
    pub n_collapse_events: u64,
}

/// Per-cycle removals from a trap, oldest first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageSeries {
    pub n_initial: u64,
    /// Duration of one cycle (or pass).
    pub period: f64,
    pub seed: u64,
    pub records: Vec<CycleRecord>,
}

impl LeakageSeries {
    /// Population present at the start of each cycle.
    pub fn at_risk(&self) -> impl Iterator<Item = u64> + '_ {
        std::iter::once(self.n_initial)
            .chain(self.records.iter().map(|r| r.n_remaining))
            .take(self.records.len())
    }

    pub fn total_removed(&self) -> u64 {
        self.records.iter().map(|r| r.n_removed).sum()
    }

    /// `n_removed + n_remaining` equals the previous `n_remaining` every cycle.
    pub fn check_bookkeeping(&self) -> Result<()> {
        let mut prev = self.n_initial;
        for r in &self.records {
            if r.n_removed + r.n_remaining != prev {
                return Err(Error::param(
                    "series",
                    format!(
                        "cycle {}: {} removed + {} remaining != {}",
                        r.cycle, r.n_removed, r.n_remaining, prev
                    ),
                ));
            }
            prev = r.n_remaining;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct AtomTally {
    removed: Vec<u64>,
    events: Vec<u64>,
}

impl AtomTally {
    fn new(n: usize) -> Self {
        AtomTally {
            removed: vec![0; n],
            events: vec![0; n],
        }
    }

    fn merge(mut self, other: AtomTally) -> AtomTally {
        self.removed
            .iter_mut()
            .zip(&other.removed)
            .for_each(|(a, b)| *a += b);
        self.events
            .iter_mut()
            .zip(&other.events)
            .for_each(|(a, b)| *a += b);
        self
    }
}

/// Runs the repeated protocol on `n_atoms` atoms starting in `g`.
///
/// Atom `i` draws from stream `i` of the configured seed for its whole
/// history, so the series is identical however the work is scheduled.
pub fn run_protocol(config: &AtomTrapConfig, n_atoms: u64) -> Result<LeakageSeries> {
    config.validate()?;
    if n_atoms < 1 {
        return Err(Error::param("n_atoms", "must be >= 1"));
    }
    let n = config.n_cycles;
    let pulses = Pulses::new(config);
    let tally = (0..n_atoms)
        .into_par_iter()
        .fold(
            || AtomTally::new(n),
            |mut t, i| {
                let mut rng = RngStream::new(config.seed, i);
                let mut s = Spinor::basis(G);
                for k in 0..n {
                    t.events[k] += run_cycle(&mut s, config, &pulses, &mut rng, |_, _| {}) as u64;
                    let level = s.measure(&mut rng);
                    let lost = if level == G {
                        config.push_efficiency > 0.0 && rng.bernoulli(config.push_efficiency)
                    } else {
                        config.excited_loss > 0.0 && rng.bernoulli(config.excited_loss)
                    };
                    if lost {
                        t.removed[k] += 1;
                        break;
                    }
                }
                t
            },
        )
        .reduce(|| AtomTally::new(n), AtomTally::merge);

    let mut remaining = n_atoms;
    let records = (0..n)
        .map(|k| {
            remaining -= tally.removed[k];
            CycleRecord {
                cycle: k + 1,
                n_removed: tally.removed[k],
                n_remaining: remaining,
                n_collapse_events: tally.events[k],
            }
        })
        .collect();
    Ok(LeakageSeries {
        n_initial: n_atoms,
        period: config.cycle_duration,
        seed: config.seed,
        records,
    })
}

/// `N0·(p/2)·(1 − p/2)^{k−1}`: expected removals at cycle `k` with an ideal push.
pub fn expected_leakage(p: f64, n0: f64, k: usize) -> f64 {
    expected_leakage_with_efficiency(p, 1.0, n0, k)
}

/// Same law with the per-cycle removal probability `η·p/2`.
pub fn expected_leakage_with_efficiency(p: f64, efficiency: f64, n0: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let q = efficiency * p / 2.0;
    n0 * q * (1.0 - q).powi(k as i32 - 1)
}

/// Probability that an atom starting the cycle in `start` is removed, from the
/// density-matrix form of the same cycle (imperfect pulses enter as the
/// mixture `f·UρU† + (1−f)·ρ`).
pub fn removal_probability_density(config: &AtomTrapConfig, start: &str) -> Result<f64> {
    config.validate()?;
    let psi = PureState::basis(LEVELS, start)?;
    let closing = if start == "g" { PI } else { 0.0 };
    let f = config.pulse_fidelity;
    let apply_pulse = |rho: DensityMatrix, r: TwoLevelRotation| -> Result<DensityMatrix> {
        let rotated = rho.conjugate(&to_dynamic(&r.matrix()), &LEVELS)?;
        let m = rotated.matrix() * crate::C64::new(f, 0.0)
            + rho.matrix() * crate::C64::new(1.0 - f, 0.0);
        DensityMatrix::new(LEVELS, m)
    };
    let half = config.cycle_duration / 2.0;
    let mut rho = DensityMatrix::from_pure(&psi);
    rho = apply_pulse(rho, TwoLevelRotation::half_pi(0.0))?;
    rho = rho.conjugate(&to_dynamic(&phase_shift(config.arm_phase)), &LEVELS)?;
    rho = apply_model_density(&rho, &config.model, half)?;
    rho = apply_pulse(rho, TwoLevelRotation::pi(0.0))?;
    rho = apply_model_density(&rho, &config.model, half)?;
    rho = apply_pulse(rho, TwoLevelRotation::half_pi(closing))?;
    let pg = rho.element("g", "g")?.re;
    let pe = rho.element("e", "e")?.re;
    Ok(pg * config.push_efficiency + pe * config.excited_loss)
}
