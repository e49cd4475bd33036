//! TOML experiment configuration.
//!
//! Parsing never stops at the first problem: every unknown key, type error,
//! missing field and out-of-range value is collected with its dotted path.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::Serialize;
use suptrap_core::collapse::CollapseModel;
use suptrap_core::inference::IntervalMethod;
use toml::{Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomSection {
    pub n_atoms: u64,
    pub n_cycles: usize,
    pub cycle_duration: f64,
    pub push_efficiency: f64,
    pub pulse_fidelity: f64,
    pub excited_loss: f64,
    pub arm_phase: f64,
    pub model: CollapseModel,
}

impl Default for AtomSection {
    fn default() -> Self {
        AtomSection {
            n_atoms: 100_000,
            n_cycles: 50,
            cycle_duration: 1.0,
            push_efficiency: 1.0,
            pulse_fidelity: 1.0,
            excited_loss: 0.0,
            arm_phase: 0.0,
            model: CollapseModel::none(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpticalSection {
    pub n_photons: u64,
    pub max_passes: usize,
    pub pass_duration: f64,
    pub arm_phase: f64,
    pub absorb_returning_collapsed: bool,
    pub model: CollapseModel,
}

impl Default for OpticalSection {
    fn default() -> Self {
        OpticalSection {
            n_photons: 100_000,
            max_passes: 1_000,
            pass_duration: 1.0,
            arm_phase: 0.0,
            absorb_returning_collapsed: false,
            model: CollapseModel::none(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub mass: f64,
    /// Box eigenstates combined with equal weight.
    pub modes: Vec<usize>,
    pub boundary: [f64; 2],
    pub n_steps: usize,
    /// Run length in beat periods of the slowest pair of modes.
    pub periods: f64,
    pub node_tolerance: f64,
}

impl Default for BubbleSection {
    fn default() -> Self {
        BubbleSection {
            x_min: 0.0,
            x_max: 1.0,
            n_points: 1025,
            mass: 1.0,
            modes: vec![2, 4],
            boundary: [0.0, 0.5],
            n_steps: 2_000,
            periods: 1.0,
            node_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathsumSection {
    pub instances: usize,
    pub max_sites: usize,
    pub max_steps: usize,
}

impl Default for PathsumSection {
    fn default() -> Self {
        PathsumSection {
            instances: 200,
            max_sites: 4,
            max_steps: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Atom,
    Optical,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateSection {
    pub input: PathBuf,
    /// Inferred from the file when absent.
    pub kind: Option<DataKind>,
    pub efficiency: f64,
    pub cycle_duration: Option<f64>,
    pub confidence: f64,
    pub interval: IntervalMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Per-cycle collapse probability; sets a projective model.
    P,
    Lambda,
    Gamma,
    PushEfficiency,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSection {
    pub target: DataKind,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub format: Format,
    pub atom: AtomSection,
    pub optical: OpticalSection,
    pub bubble: BubbleSection,
    pub pathsum: PathsumSection,
    pub estimate: Option<EstimateSection>,
    pub sweep: Option<SweepSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output_dir: PathBuf::from("out"),
            format: Format::Csv,
            atom: AtomSection::default(),
            optical: OpticalSection::default(),
            bubble: BubbleSection::default(),
            pathsum: PathsumSection::default(),
            estimate: None,
            sweep: None,
        }
    }
}

type Check = fn(f64) -> Option<&'static str>;

fn unit(v: f64) -> Option<&'static str> {
    (!(0.0..=1.0).contains(&v)).then_some("must lie in [0, 1]")
}

fn half_open_unit(v: f64) -> Option<&'static str> {
    (!(0.0..1.0).contains(&v)).then_some("must lie in [0, 1)")
}

fn open_unit(v: f64) -> Option<&'static str> {
    (!(v > 0.0 && v < 1.0)).then_some("must lie in (0, 1)")
}

fn efficiency(v: f64) -> Option<&'static str> {
    (!(v > 0.0 && v <= 1.0)).then_some("must lie in (0, 1]")
}

fn positive(v: f64) -> Option<&'static str> {
    (!(v > 0.0 && v.is_finite())).then_some("must be > 0")
}

fn non_negative(v: f64) -> Option<&'static str> {
    (!(v >= 0.0 && v.is_finite())).then_some("must be >= 0")
}

fn finite(v: f64) -> Option<&'static str> {
    (!v.is_finite()).then_some("must be finite")
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

/// Reads keys from one table, remembering which ones were consulted.
struct Reader<'a> {
    path: String,
    table: &'a Table,
    used: BTreeSet<&'static str>,
}

impl<'a> Reader<'a> {
    fn new(path: &str, table: &'a Table) -> Self {
        Reader {
            path: path.to_string(),
            table,
            used: BTreeSet::new(),
        }
    }

    fn at(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn get(&mut self, key: &'static str) -> Option<&'a Value> {
        self.used.insert(key);
        self.table.get(key)
    }

    fn has(&self, key: &str) -> bool {
        self.table.contains_key(key)
    }

    fn mismatch(&self, key: &str, want: &str, v: &Value, errs: &mut Vec<String>) {
        errs.push(format!(
            "{}: expected {want}, got {}",
            self.at(key),
            type_name(v)
        ));
    }

    fn f64_opt(&mut self, key: &'static str, check: Check, errs: &mut Vec<String>) -> Option<f64> {
        let v = match self.get(key)? {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            other => {
                self.mismatch(key, "number", other, errs);
                return None;
            }
        };
        if let Some(why) = check(v) {
            errs.push(format!("{}: {why}, got {v}", self.at(key)));
            return None;
        }
        Some(v)
    }

    fn f64(
        &mut self,
        key: &'static str,
        default: f64,
        check: Check,
        errs: &mut Vec<String>,
    ) -> f64 {
        self.f64_opt(key, check, errs).unwrap_or(default)
    }

    fn count_opt(&mut self, key: &'static str, min: u64, errs: &mut Vec<String>) -> Option<u64> {
        let v = match self.get(key)? {
            Value::Integer(i) if *i >= 0 => *i as u64,
            // allows `1e5`
            Value::Float(x) if *x >= 0.0 && x.fract() == 0.0 && *x < 9e15 => *x as u64,
            Value::Integer(_) | Value::Float(_) => {
                errs.push(format!("{}: must be a non-negative integer", self.at(key)));
                return None;
            }
            other => {
                self.mismatch(key, "integer", other, errs);
                return None;
            }
        };
        if v < min {
            errs.push(format!("{}: must be >= {min}, got {v}", self.at(key)));
            return None;
        }
        Some(v)
    }

    fn count(&mut self, key: &'static str, default: u64, min: u64, errs: &mut Vec<String>) -> u64 {
        self.count_opt(key, min, errs).unwrap_or(default)
    }

    fn string(&mut self, key: &'static str, errs: &mut Vec<String>) -> Option<&'a str> {
        match self.get(key)? {
            Value::String(s) => Some(s),
            other => {
                self.mismatch(key, "string", other, errs);
                None
            }
        }
    }

    fn choice<T>(
        &mut self,
        key: &'static str,
        options: &[(&str, T)],
        errs: &mut Vec<String>,
    ) -> Option<T>
    where
        T: Copy,
    {
        let s = self.string(key, errs)?;
        match options.iter().find(|(name, _)| *name == s) {
            Some((_, v)) => Some(*v),
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                errs.push(format!(
                    "{}: unknown value \"{s}\" (expected one of {})",
                    self.at(key),
                    names.join(", ")
                ));
                None
            }
        }
    }

    fn boolean(&mut self, key: &'static str, default: bool, errs: &mut Vec<String>) -> bool {
        match self.get(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.mismatch(key, "boolean", other, errs);
                default
            }
        }
    }

    fn array(&mut self, key: &'static str, errs: &mut Vec<String>) -> Option<&'a [Value]> {
        match self.get(key)? {
            Value::Array(a) => Some(a),
            other => {
                self.mismatch(key, "array", other, errs);
                None
            }
        }
    }

    fn f64_array(&mut self, key: &'static str, errs: &mut Vec<String>) -> Option<Vec<f64>> {
        let items = self.array(key, errs)?;
        let mut out = Vec::with_capacity(items.len());
        for (i, v) in items.iter().enumerate() {
            match v {
                Value::Float(x) => out.push(*x),
                Value::Integer(n) => out.push(*n as f64),
                other => {
                    errs.push(format!(
                        "{}[{i}]: expected number, got {}",
                        self.at(key),
                        type_name(other)
                    ));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn table(&mut self, key: &'static str, errs: &mut Vec<String>) -> Option<&'a Table> {
        match self.get(key)? {
            Value::Table(t) => Some(t),
            other => {
                self.mismatch(key, "table", other, errs);
                None
            }
        }
    }

    fn finish(self, errs: &mut Vec<String>) {
        for key in self.table.keys() {
            if !self.used.contains(key.as_str()) {
                errs.push(format!("{}: unknown key", self.at(key)));
            }
        }
    }
}

/// `p = 1 − e^{−rate·τ}` solved for the rate.
fn rate_for_probability(p: f64, duration: f64) -> f64 {
    -(-p).ln_1p() / duration
}

fn parse_model(r: &mut Reader, duration: f64, errs: &mut Vec<String>) -> CollapseModel {
    let Some(t) = r.table("model", errs) else {
        return CollapseModel::none();
    };
    let mut m = Reader::new(&r.at("model"), t);
    let kinds = [
        ("none", 0u8),
        ("dephasing", 1),
        ("projective", 2),
        ("projective_events", 2),
        ("csl_like", 3),
    ];
    let kind = if m.has("kind") {
        m.choice("kind", &kinds, errs)
    } else {
        Some(0)
    };

    let rate = |m: &mut Reader, key: &'static str, errs: &mut Vec<String>| -> f64 {
        match (m.has(key), m.has("p")) {
            (true, true) => {
                m.get(key);
                m.get("p");
                errs.push(format!("{}: give either {key} or p, not both", m.path));
                0.0
            }
            (false, false) => {
                errs.push(format!("{}: missing required field ({key} or p)", m.path));
                0.0
            }
            (true, false) => m.f64(key, 0.0, non_negative, errs),
            (false, true) => {
                let p = m.f64("p", 0.0, half_open_unit, errs);
                rate_for_probability(p, duration)
            }
        }
    };

    let model = match kind {
        Some(1) => CollapseModel::dephasing(rate(&mut m, "gamma", errs)),
        Some(2) => CollapseModel::projective(rate(&mut m, "lambda", errs)),
        Some(3) => {
            let lambda0 = m.f64_opt("lambda0", non_negative, errs);
            if lambda0.is_none() && !m.has("lambda0") {
                errs.push(format!("{}: missing required field", m.at("lambda0")));
            }
            let mass = m.f64("mass_factor", 1.0, non_negative, errs);
            let sep = m.f64("sep_factor", 1.0, unit, errs);
            CollapseModel::csl_like(lambda0.unwrap_or(0.0), mass, sep)
        }
        _ => Ok(CollapseModel::none()),
    };
    m.finish(errs);
    model.unwrap_or_else(|e| {
        errs.push(format!("{}: {e}", r.at("model")));
        CollapseModel::none()
    })
}

fn parse_atom(t: &Table, errs: &mut Vec<String>) -> AtomSection {
    let d = AtomSection::default();
    let mut r = Reader::new("atom", t);
    let cycle_duration = r.f64("cycle_duration", d.cycle_duration, positive, errs);
    let s = AtomSection {
        n_atoms: r.count("n_atoms", d.n_atoms, 1, errs),
        n_cycles: r.count("n_cycles", d.n_cycles as u64, 1, errs) as usize,
        cycle_duration,
        push_efficiency: r.f64("push_efficiency", d.push_efficiency, unit, errs),
        pulse_fidelity: r.f64("pulse_fidelity", d.pulse_fidelity, unit, errs),
        excited_loss: r.f64("excited_loss", d.excited_loss, unit, errs),
        arm_phase: r.f64("arm_phase", d.arm_phase, finite, errs),
        model: parse_model(&mut r, cycle_duration, errs),
    };
    r.finish(errs);
    s
}

fn parse_optical(t: &Table, errs: &mut Vec<String>) -> OpticalSection {
    let d = OpticalSection::default();
    let mut r = Reader::new("optical", t);
    let pass_duration = r.f64("pass_duration", d.pass_duration, positive, errs);
    let s = OpticalSection {
        n_photons: r.count("n_photons", d.n_photons, 1, errs),
        max_passes: r.count("max_passes", d.max_passes as u64, 1, errs) as usize,
        pass_duration,
        arm_phase: r.f64("arm_phase", d.arm_phase, finite, errs),
        absorb_returning_collapsed: r.boolean(
            "absorb_returning_collapsed",
            d.absorb_returning_collapsed,
            errs,
        ),
        model: parse_model(&mut r, pass_duration, errs),
    };
    r.finish(errs);
    s
}

fn parse_bubble(t: &Table, errs: &mut Vec<String>) -> BubbleSection {
    let d = BubbleSection::default();
    let mut r = Reader::new("bubble", t);
    let x_min = r.f64("x_min", d.x_min, finite, errs);
    let x_max = r.f64("x_max", d.x_max, finite, errs);
    if x_max <= x_min {
        errs.push(format!(
            "bubble.x_max: must exceed x_min ({x_min}), got {x_max}"
        ));
    }
    let modes = match r.array("modes", errs) {
        None => d.modes.clone(),
        Some(items) => {
            let mut out = Vec::new();
            for (i, v) in items.iter().enumerate() {
                match v {
                    Value::Integer(n) if *n >= 1 => out.push(*n as usize),
                    _ => errs.push(format!("bubble.modes[{i}]: must be an integer >= 1")),
                }
            }
            if out.is_empty() {
                errs.push("bubble.modes: must list at least one mode".to_string());
            }
            out
        }
    };
    let default_boundary = [x_min, 0.5 * (x_min + x_max)];
    let boundary = match r.f64_array("boundary", errs) {
        None => default_boundary,
        Some(v) if v.len() == 2 && v[0] <= v[1] && v[0] >= x_min && v[1] <= x_max => [v[0], v[1]],
        Some(v) => {
            errs.push(format!(
                "bubble.boundary: expected [a, b] with {x_min} <= a <= b <= {x_max}, got {v:?}"
            ));
            default_boundary
        }
    };
    let s = BubbleSection {
        x_min,
        x_max,
        n_points: r.count("n_points", d.n_points as u64, 8, errs) as usize,
        mass: r.f64("mass", d.mass, positive, errs),
        modes,
        boundary,
        n_steps: r.count("n_steps", d.n_steps as u64, 1, errs) as usize,
        periods: r.f64("periods", d.periods, positive, errs),
        node_tolerance: r.f64("node_tolerance", d.node_tolerance, positive, errs),
    };
    r.finish(errs);
    s
}

fn parse_pathsum(t: &Table, errs: &mut Vec<String>) -> PathsumSection {
    let d = PathsumSection::default();
    let mut r = Reader::new("pathsum", t);
    let s = PathsumSection {
        instances: r.count("instances", d.instances as u64, 1, errs) as usize,
        max_sites: r.count("max_sites", d.max_sites as u64, 2, errs) as usize,
        max_steps: r.count("max_steps", d.max_steps as u64, 2, errs) as usize,
    };
    r.finish(errs);
    s
}

fn parse_estimate(t: &Table, errs: &mut Vec<String>) -> Option<EstimateSection> {
    let mut r = Reader::new("estimate", t);
    let input = r.string("input", errs).map(PathBuf::from);
    if input.is_none() && !r.has("input") {
        errs.push("estimate.input: missing required field".to_string());
    }
    let kind = r.choice(
        "kind",
        &[("atom", DataKind::Atom), ("optical", DataKind::Optical)],
        errs,
    );
    let interval = r
        .choice(
            "interval",
            &[
                ("wald", IntervalMethod::Wald),
                ("profile_likelihood", IntervalMethod::ProfileLikelihood),
            ],
            errs,
        )
        .unwrap_or_default();
    let s = EstimateSection {
        input: input.unwrap_or_default(),
        kind,
        efficiency: r.f64("efficiency", 1.0, efficiency, errs),
        cycle_duration: r.f64_opt("cycle_duration", positive, errs),
        confidence: r.f64("confidence", 0.95, open_unit, errs),
        interval,
    };
    r.finish(errs);
    Some(s)
}

fn parse_sweep(t: &Table, errs: &mut Vec<String>) -> Option<SweepSection> {
    let mut r = Reader::new("sweep", t);
    let target = if r.has("target") {
        r.choice(
            "target",
            &[("atom", DataKind::Atom), ("optical", DataKind::Optical)],
            errs,
        )
    } else {
        Some(DataKind::Atom)
    };
    let parameters = [
        ("p", SweepParameter::P),
        ("lambda", SweepParameter::Lambda),
        ("gamma", SweepParameter::Gamma),
        ("push_efficiency", SweepParameter::PushEfficiency),
    ];
    let parameter = r.choice("parameter", &parameters, errs);
    if parameter.is_none() && !r.has("parameter") {
        errs.push("sweep.parameter: missing required field".to_string());
    }
    let values = r.f64_array("values", errs);
    if values.is_none() && !r.has("values") {
        errs.push("sweep.values: missing required field".to_string());
    }
    r.finish(errs);
    let (target, parameter, values) = (target?, parameter?, values?);
    if values.is_empty() {
        errs.push("sweep.values: must not be empty".to_string());
    }
    let check: Check = match parameter {
        SweepParameter::P => half_open_unit,
        SweepParameter::Lambda | SweepParameter::Gamma => non_negative,
        SweepParameter::PushEfficiency => unit,
    };
    for (i, v) in values.iter().enumerate() {
        if let Some(why) = check(*v) {
            errs.push(format!("sweep.values[{i}]: {why}, got {v}"));
        }
    }
    if parameter == SweepParameter::PushEfficiency && target == DataKind::Optical {
        errs.push("sweep.parameter: push_efficiency applies only to target \"atom\"".to_string());
    }
    Some(SweepSection {
        target,
        parameter,
        values,
    })
}

/// Parses and validates a configuration, returning every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let root: Table = toml::from_str(text).map_err(|e| vec![format!("syntax: {}", e.message())])?;
    let mut errs = Vec::new();
    let mut r = Reader::new("", &root);
    let mut config = ExperimentConfig::default();

    if let Some(seed) = r.count_opt("seed", 0, &mut errs) {
        config.seed = seed;
    }
    if let Some(dir) = r.string("output_dir", &mut errs) {
        config.output_dir = PathBuf::from(dir);
    }
    if let Some(f) = r.choice(
        "format",
        &[("csv", Format::Csv), ("json", Format::Json)],
        &mut errs,
    ) {
        config.format = f;
    }
    if let Some(t) = r.table("atom", &mut errs) {
        config.atom = parse_atom(t, &mut errs);
    }
    if let Some(t) = r.table("optical", &mut errs) {
        config.optical = parse_optical(t, &mut errs);
    }
    if let Some(t) = r.table("bubble", &mut errs) {
        config.bubble = parse_bubble(t, &mut errs);
    }
    if let Some(t) = r.table("pathsum", &mut errs) {
        config.pathsum = parse_pathsum(t, &mut errs);
    }
    if let Some(t) = r.table("estimate", &mut errs) {
        config.estimate = parse_estimate(t, &mut errs);
    }
    if let Some(t) = r.table("sweep", &mut errs) {
        config.sweep = parse_sweep(t, &mut errs);
    }
    r.finish(&mut errs);

    if errs.is_empty() {
        Ok(config)
    } else {
        Err(errs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use suptrap_core::collapse::CollapseKind;

    #[test]
    fn empty_config_is_all_defaults() {
        assert_eq!(parse_config("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn minimal_atom_config_fills_defaults() {
        let c = parse_config("[atom]\nn_atoms = 1000\n").unwrap();
        assert_eq!(
            c.atom,
            AtomSection {
                n_atoms: 1000,
                ..AtomSection::default()
            }
        );
        assert_eq!(c.atom.model, CollapseModel::none());
    }

    #[test]
    fn model_probability_shortcut() {
        let c = parse_config(
            "[atom]\ncycle_duration = 2.0\n[atom.model]\nkind = \"projective\"\np = 0.1\n",
        )
        .unwrap();
        let CollapseKind::ProjectiveEvents { lambda } = c.atom.model.kind else {
            panic!()
        };
        assert!((c.atom.model.collapse_probability(2.0) - 0.1).abs() < 1e-15);
        assert!((lambda - (-(0.9f64).ln() / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_efficiency_names_field_and_range() {
        let errs = parse_config("[atom]\npush_efficiency = 1.5\n").unwrap_err();
        assert_eq!(
            errs,
            vec!["atom.push_efficiency: must lie in [0, 1], got 1.5".to_string()]
        );
    }

    #[test]
    fn errors_accumulate() {
        let errs = parse_config("seed = -1\nbogus = 1\n[atom]\npush_efficiency = 1.5\nn_cycles = 0\n[atom.model]\nkind = \"projective\"\n")
            .unwrap_err();
        assert_eq!(errs.len(), 5, "{errs:#?}");
        assert!(errs.iter().any(|e| e.starts_with("seed:")));
        assert!(errs.iter().any(|e| e == "bogus: unknown key"));
        assert!(errs.iter().any(|e| e.starts_with("atom.push_efficiency:")));
        assert!(errs.iter().any(|e| e.starts_with("atom.n_cycles:")));
        assert!(errs
            .iter()
            .any(|e| e.starts_with("atom.model: missing required field")));
    }

    #[test]
    fn unknown_nested_keys_are_rejected() {
        let errs = parse_config("[optical.model]\nkind = \"dephasing\"\ngamma = 0.1\nlambda = 2\n")
            .unwrap_err();
        assert_eq!(errs, vec!["optical.model.lambda: unknown key".to_string()]);
        let errs = parse_config("[atom.model]\nkind = \"magic\"\n").unwrap_err();
        assert!(errs[0].contains("unknown value \"magic\""));
    }

    #[test]
    fn type_errors_are_reported() {
        let errs = parse_config("format = \"xml\"\n[bubble]\nmass = \"heavy\"\n").unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(errs
            .iter()
            .any(|e| e == "bubble.mass: expected number, got string"));
    }

    #[test]
    fn estimate_and_sweep_sections() {
        let c = parse_config(
            "[estimate]\ninput = \"atom.csv\"\ninterval = \"profile_likelihood\"\ncycle_duration = 1.0\n\
             [sweep]\nparameter = \"p\"\nvalues = [0.01, 0.05, 0.2]\n",
        )
        .unwrap();
        let e = c.estimate.unwrap();
        assert_eq!(e.interval, IntervalMethod::ProfileLikelihood);
        assert_eq!(e.efficiency, 1.0);
        let s = c.sweep.unwrap();
        assert_eq!(s.target, DataKind::Atom);
        assert_eq!(s.values, vec![0.01, 0.05, 0.2]);

        let errs =
            parse_config("[estimate]\n[sweep]\nparameter = \"p\"\nvalues = [1.0]\n").unwrap_err();
        assert_eq!(errs.len(), 2, "{errs:#?}");
    }

    #[test]
    fn counts_accept_whole_floats() {
        let c = parse_config("[atom]\nn_atoms = 1e5\n").unwrap();
        assert_eq!(c.atom.n_atoms, 100_000);
        assert!(parse_config("[atom]\nn_atoms = 1.5\n").is_err());
    }

    #[test]
    fn syntax_errors_are_validation_errors() {
        let errs = parse_config("[atom\n").unwrap_err();
        assert!(errs[0].starts_with("syntax:"));
    }
}
