//! Subcommand pipelines.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use suptrap_core::atom::{
    expected_leakage_with_efficiency, run_protocol, AtomTrapConfig, CycleRecord, LeakageSeries,
};
use suptrap_core::collapse::CollapseModel;
use suptrap_core::inference::{binomial_mle, geometric_mle, EstimateOptions, RateEstimate};
use suptrap_core::optical::{
    interference_law, simulate_ensemble, OpticalEnsemble, OpticalTrapConfig,
};
use suptrap_core::pathsum::{oracle_suite, PathsumReport};
use suptrap_core::wavefield::{
    box_eigenstate, box_energy, bubble_trace, find_nodes, BubbleBoundary, BubbleTrace, Grid1D,
    GridWavefunction, Potential,
};
use suptrap_core::{RngStream, C64};

use crate::config::{
    AtomSection, BubbleSection, DataKind, EstimateSection, ExperimentConfig, Format,
    OpticalSection, SweepParameter, SweepSection,
};
use crate::output::{csv_bytes, json_bytes, sha256_hex, Artifact, Artifacts};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Bubble,
    Pathsum,
    Optical,
    Atom,
    Estimate,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bubble => "bubble",
            Command::Pathsum => "pathsum",
            Command::Optical => "optical",
            Command::Atom => "atom",
            Command::Estimate => "estimate",
            Command::Sweep => "sweep",
        }
    }
}

/// Runs one subcommand, writes its artifacts and the run manifest.
pub fn run(command: Command, config: &ExperimentConfig) -> Result<Vec<Artifact>, CliError> {
    // missing sections are configuration problems, caught before any output
    if command == Command::Estimate && config.estimate.is_none() {
        return Err(CliError::Validation(vec![
            "estimate: section required for this subcommand".into(),
        ]));
    }
    if command == Command::Sweep && config.sweep.is_none() {
        return Err(CliError::Validation(vec![
            "sweep: section required for this subcommand".into(),
        ]));
    }
    let mut out = Artifacts::new(&config.output_dir)?;
    match command {
        Command::Bubble => bubble(config, &mut out)?,
        Command::Pathsum => pathsum(config, &mut out)?,
        Command::Optical => optical(config, &mut out)?,
        Command::Atom => atom(config, &mut out)?,
        Command::Estimate => estimate(config.estimate.as_ref().expect("checked"), &mut out)?,
        Command::Sweep => sweep(config, config.sweep.as_ref().expect("checked"), &mut out)?,
    }
    out.finish(command.name(), config)
}

fn data_bytes<T: Serialize>(format: Format, rows: &[T]) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Csv => csv_bytes(rows),
        Format::Json => json_bytes(rows),
    }
}

// ---- bubble

#[derive(Serialize)]
struct BubbleSummary<'a> {
    config: &'a BubbleSection,
    dt: f64,
    beat_period: f64,
    initial_nodes: Vec<f64>,
    enclosed_initial: f64,
    enclosed_variation: f64,
    max_boundary_current: f64,
    final_norm: f64,
}

/// Longest beat period among the listed modes (a single mode uses its own phase period).
fn beat_period(grid: &Grid1D, modes: &[usize], mass: f64) -> f64 {
    let energies: Vec<f64> = modes.iter().map(|&n| box_energy(grid, n, mass)).collect();
    let mut gap = f64::INFINITY;
    for (i, a) in energies.iter().enumerate() {
        for b in &energies[i + 1..] {
            if (a - b).abs() > 0.0 {
                gap = gap.min((a - b).abs());
            }
        }
    }
    if gap.is_finite() {
        2.0 * std::f64::consts::PI / gap
    } else {
        2.0 * std::f64::consts::PI / energies[0]
    }
}

pub fn bubble_run(s: &BubbleSection) -> Result<(BubbleTrace, Vec<f64>, f64), CliError> {
    let grid = Grid1D::spanning(s.x_min, s.x_max, s.n_points)?;
    let states = s
        .modes
        .iter()
        .map(|&n| box_eigenstate(grid, n, s.mass))
        .collect::<Result<Vec<_>, _>>()?;
    let parts: Vec<(C64, &GridWavefunction)> =
        states.iter().map(|psi| (C64::new(1.0, 0.0), psi)).collect();
    let psi0 = GridWavefunction::superpose(&parts)?;
    let period = beat_period(&grid, &s.modes, s.mass);
    let dt = s.periods * period / s.n_steps as f64;
    let boundary = BubbleBoundary::new(s.boundary[0], s.boundary[1], &grid)?;
    let trace = bubble_trace(&psi0, &Potential::zero(&grid), &boundary, dt, s.n_steps)?;
    let nodes = find_nodes(&psi0, s.node_tolerance)?;
    Ok((trace, nodes, period))
}

fn bubble(config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let s = &config.bubble;
    let (trace, nodes, beat_period) = bubble_run(s)?;
    let name = format!("bubble.{}", config.format.extension());
    out.write(&name, &data_bytes(config.format, &trace.samples)?)?;
    let summary = BubbleSummary {
        config: s,
        dt: trace.dt,
        beat_period,
        initial_nodes: nodes,
        enclosed_initial: trace.samples[0].enclosed_probability,
        enclosed_variation: trace.enclosed_variation(),
        max_boundary_current: trace.max_boundary_current(),
        final_norm: trace.samples.last().map_or(1.0, |r| r.norm),
    };
    out.write_json("bubble_summary.json", &summary)?;
    Ok(())
}

// ---- pathsum

fn pathsum(config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let s = &config.pathsum;
    let mut rng = RngStream::new(config.seed, 0);
    let report: PathsumReport = oracle_suite(s.instances, s.max_sites, s.max_steps, &mut rng)?;
    let name = format!("pathsum.{}", config.format.extension());
    out.write(
        &name,
        &data_bytes(config.format, std::slice::from_ref(&report))?,
    )?;
    Ok(())
}

// ---- optical

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticalRow {
    pub pass: usize,
    #[serde(rename = "escapes_D1")]
    pub escapes_d1: u64,
    #[serde(rename = "escapes_D2")]
    pub escapes_d2: u64,
    pub survivors: u64,
}

#[derive(Serialize)]
struct OpticalSummary<'a> {
    config: &'a OpticalSection,
    seed: u64,
    collapse_probability: f64,
    dark_port_probability: f64,
    total_escapes: u64,
    total_absorbed: u64,
    survivors: u64,
    estimate: Option<RateEstimate>,
}

fn optical_config(s: &OpticalSection, seed: u64) -> Result<OpticalTrapConfig, CliError> {
    let mut c = OpticalTrapConfig::new(s.model.clone(), s.pass_duration, s.max_passes, seed)?;
    c.arm_phase = s.arm_phase;
    c.absorb_returning_collapsed = s.absorb_returning_collapsed;
    c.validate()?;
    Ok(c)
}

fn optical_rows(e: &OpticalEnsemble) -> Vec<OpticalRow> {
    e.rows
        .iter()
        .map(|r| OpticalRow {
            pass: r.pass,
            escapes_d1: r.escapes_d1,
            escapes_d2: r.escapes_d2,
            survivors: r.survivors,
        })
        .collect()
}

fn optical_estimate(e: &OpticalEnsemble, pass_duration: f64) -> Option<RateEstimate> {
    let (escapes, censored) = e.escape_samples();
    let options = EstimateOptions {
        cycle_duration: Some(pass_duration),
        ..Default::default()
    };
    geometric_mle(&escapes, censored, e.rows.len() as u64, &options).ok()
}

fn optical_point(
    s: &OpticalSection,
    seed: u64,
    format: Format,
) -> Result<(Vec<u8>, OpticalSummary<'_>), CliError> {
    let cfg = optical_config(s, seed)?;
    let ensemble = simulate_ensemble(&cfg, s.n_photons)?;
    let data = data_bytes(format, &optical_rows(&ensemble))?;
    let summary = OpticalSummary {
        config: s,
        seed,
        collapse_probability: cfg.collapse_probability(),
        dark_port_probability: interference_law(s.arm_phase),
        total_escapes: ensemble.total_escapes(),
        total_absorbed: ensemble.total_absorbed(),
        survivors: ensemble.survivors(),
        estimate: optical_estimate(&ensemble, s.pass_duration),
    };
    Ok((data, summary))
}

fn optical(config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let (data, summary) = optical_point(&config.optical, config.seed, config.format)?;
    out.write(&format!("optical.{}", config.format.extension()), &data)?;
    out.write_json("optical_summary.json", &summary)?;
    Ok(())
}

// ---- atom

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRow {
    pub cycle: usize,
    pub removed: u64,
    pub remaining: u64,
    pub events: u64,
    /// Ideal-pulse prediction for this cycle.
    pub expected_removed: f64,
}

#[derive(Serialize)]
struct AtomSummary<'a> {
    config: &'a AtomSection,
    seed: u64,
    collapse_probability: f64,
    total_removed: u64,
    final_remaining: u64,
    estimate: Option<RateEstimate>,
}

pub fn atom_config(s: &AtomSection, seed: u64) -> Result<AtomTrapConfig, CliError> {
    let mut c = AtomTrapConfig::new(s.model.clone(), s.cycle_duration, s.n_cycles, seed)?;
    c.push_efficiency = s.push_efficiency;
    c.pulse_fidelity = s.pulse_fidelity;
    c.excited_loss = s.excited_loss;
    c.arm_phase = s.arm_phase;
    c.validate()?;
    Ok(c)
}

fn atom_rows(series: &LeakageSeries, p: f64, efficiency: f64) -> Vec<AtomRow> {
    series
        .records
        .iter()
        .map(|r| AtomRow {
            cycle: r.cycle,
            removed: r.n_removed,
            remaining: r.n_remaining,
            events: r.n_collapse_events,
            expected_removed: expected_leakage_with_efficiency(
                p,
                efficiency,
                series.n_initial as f64,
                r.cycle,
            ),
        })
        .collect()
}

fn atom_point(
    s: &AtomSection,
    seed: u64,
    format: Format,
) -> Result<(Vec<u8>, AtomSummary<'_>), CliError> {
    let cfg = atom_config(s, seed)?;
    let series = run_protocol(&cfg, s.n_atoms)?;
    let p = cfg.collapse_probability();
    let data = data_bytes(format, &atom_rows(&series, p, s.push_efficiency))?;
    let options = EstimateOptions {
        efficiency: s.push_efficiency,
        ..Default::default()
    };
    let summary = AtomSummary {
        config: s,
        seed,
        collapse_probability: p,
        total_removed: series.total_removed(),
        final_remaining: series.records.last().map_or(s.n_atoms, |r| r.n_remaining),
        estimate: binomial_mle(&series, &options).ok(),
    };
    Ok((data, summary))
}

fn atom(config: &ExperimentConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let (data, summary) = atom_point(&config.atom, config.seed, config.format)?;
    out.write(&format!("atom.{}", config.format.extension()), &data)?;
    out.write_json("atom_summary.json", &summary)?;
    Ok(())
}

// ---- estimate

#[derive(Serialize)]
struct EstimateOutput<'a> {
    input: String,
    input_sha256: String,
    kind: DataKind,
    config: &'a EstimateSection,
    estimate: RateEstimate,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, bytes: &[u8]) -> Result<Vec<T>, CliError> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let context = |e: String| CliError::Runtime(format!("{}: {e}", path.display()));
    if is_json {
        serde_json::from_slice(bytes).map_err(|e| context(e.to_string()))
    } else {
        csv::Reader::from_reader(bytes)
            .deserialize()
            .collect::<Result<Vec<T>, _>>()
            .map_err(|e| context(e.to_string()))
    }
}

fn detect_kind(path: &Path, bytes: &[u8]) -> Result<DataKind, CliError> {
    let head = String::from_utf8_lossy(&bytes[..bytes.len().min(256)]);
    if head.contains("cycle") {
        Ok(DataKind::Atom)
    } else if head.contains("pass") {
        Ok(DataKind::Optical)
    } else {
        Err(CliError::Runtime(format!(
            "{}: cannot tell atom from optical data; set estimate.kind",
            path.display()
        )))
    }
}

pub fn estimate_from_bytes(
    s: &EstimateSection,
    bytes: &[u8],
) -> Result<(DataKind, RateEstimate), CliError> {
    let kind = match s.kind {
        Some(k) => k,
        None => detect_kind(&s.input, bytes)?,
    };
    let options = EstimateOptions {
        confidence: s.confidence,
        method: s.interval,
        efficiency: s.efficiency,
        cycle_duration: s.cycle_duration,
    };
    let estimate = match kind {
        DataKind::Atom => {
            let rows: Vec<AtomRow> = read_rows(&s.input, bytes)?;
            let first = rows
                .first()
                .ok_or_else(|| CliError::Runtime("no rows in input".into()))?;
            let series = LeakageSeries {
                n_initial: first.removed + first.remaining,
                period: 0.0,
                seed: 0,
                records: rows
                    .iter()
                    .map(|r| CycleRecord {
                        cycle: r.cycle,
                        n_removed: r.removed,
                        n_remaining: r.remaining,
                        n_collapse_events: r.events,
                    })
                    .collect(),
            };
            binomial_mle(&series, &options)?
        }
        DataKind::Optical => {
            let rows: Vec<OpticalRow> = read_rows(&s.input, bytes)?;
            let mut escapes = Vec::new();
            for r in &rows {
                escapes.extend(std::iter::repeat_n(
                    r.pass as u64,
                    (r.escapes_d1 + r.escapes_d2) as usize,
                ));
            }
            let censored = rows.last().map_or(0, |r| r.survivors);
            let max_pass = rows.last().map_or(0, |r| r.pass as u64);
            geometric_mle(&escapes, censored, max_pass, &options)?
        }
    };
    Ok((kind, estimate))
}

fn estimate(s: &EstimateSection, out: &mut Artifacts) -> Result<(), CliError> {
    let bytes =
        fs::read(&s.input).map_err(|e| CliError::Runtime(format!("{}: {e}", s.input.display())))?;
    let (kind, estimate) = estimate_from_bytes(s, &bytes)?;
    let output = EstimateOutput {
        input: s.input.display().to_string(),
        input_sha256: sha256_hex(&bytes),
        kind,
        config: s,
        estimate,
    };
    out.write_json("estimate.json", &output)?;
    Ok(())
}

// ---- sweep

#[derive(Clone, Debug, Serialize)]
struct SweepRow {
    index: usize,
    value: f64,
    file: String,
    collapse_probability: f64,
    removed_total: u64,
    q_hat: Option<f64>,
    p_hat: Option<f64>,
    lambda_hat: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    p_ci_low: Option<f64>,
    p_ci_high: Option<f64>,
}

fn swept_model(
    parameter: SweepParameter,
    value: f64,
    duration: f64,
    base: &CollapseModel,
) -> Result<CollapseModel, CliError> {
    Ok(match parameter {
        SweepParameter::P => CollapseModel::projective(-(-value).ln_1p() / duration)?,
        SweepParameter::Lambda => CollapseModel::projective(value)?,
        SweepParameter::Gamma => CollapseModel::dephasing(value)?,
        SweepParameter::PushEfficiency => base.clone(),
    })
}

fn sweep_point(
    config: &ExperimentConfig,
    s: &SweepSection,
    index: usize,
) -> Result<(Vec<u8>, SweepRow), CliError> {
    let value = s.values[index];
    let file = format!("sweep/point_{index:03}.{}", config.format.extension());
    let (data, probability, removed, estimate) = match s.target {
        DataKind::Atom => {
            let mut section = config.atom.clone();
            section.model =
                swept_model(s.parameter, value, section.cycle_duration, &section.model)?;
            if s.parameter == SweepParameter::PushEfficiency {
                section.push_efficiency = value;
            }
            let (data, summary) = atom_point(&section, config.seed, config.format)?;
            (
                data,
                summary.collapse_probability,
                summary.total_removed,
                summary.estimate,
            )
        }
        DataKind::Optical => {
            let mut section = config.optical.clone();
            section.model = swept_model(s.parameter, value, section.pass_duration, &section.model)?;
            let (data, summary) = optical_point(&section, config.seed, config.format)?;
            let removed = summary.total_escapes + summary.total_absorbed;
            (
                data,
                summary.collapse_probability,
                removed,
                summary.estimate,
            )
        }
    };
    let row = SweepRow {
        index,
        value,
        file,
        collapse_probability: probability,
        removed_total: removed,
        q_hat: estimate.as_ref().map(|e| e.q_hat),
        p_hat: estimate.as_ref().map(|e| e.p_hat),
        lambda_hat: estimate.as_ref().and_then(|e| e.lambda_hat),
        ci_low: estimate.as_ref().map(|e| e.ci_low),
        ci_high: estimate.as_ref().map(|e| e.ci_high),
        p_ci_low: estimate.as_ref().map(|e| e.p_ci_low),
        p_ci_high: estimate.as_ref().map(|e| e.p_ci_high),
    };
    Ok((data, row))
}

/// Points run in parallel with the same seed; files are written afterwards by
/// this thread alone, in point order.
fn sweep(config: &ExperimentConfig, s: &SweepSection, out: &mut Artifacts) -> Result<(), CliError> {
    let results = (0..s.values.len())
        .into_par_iter()
        .map(|i| sweep_point(config, s, i))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(results.len());
    for (data, row) in results {
        out.write(&row.file, &data)?;
        rows.push(row);
    }
    let name = format!("sweep_summary.{}", config.format.extension());
    out.write(&name, &data_bytes(config.format, &rows)?)?;
    Ok(())
}
