//! Experiment configs: one TOML file per experiment.
//!
//! Validation walks the whole document and reports every violation with a
//! field path (`n_atoms[1]`, `model.theta`) instead of stopping at the first.
//! Keys that no experiment reads are rejected.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use toml::{Table, Value};

/// Largest ensemble the factorization study accepts.
pub const MAX_EXACT_ATOMS: usize = pairlind::ensemble::MAX_EXACT_ATOMS;
/// Largest ensemble for the master equation and Monte Carlo.
pub const MAX_ATOMS: usize = 100_000;
/// Cap on table rows, grid points and Monte Carlo runs.
pub const MAX_COUNT: usize = 10_000_000;
/// Cap on integrator steps per trajectory.
pub const MAX_STEPS: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    MeanfieldTrajectory,
    DephasingRateScan,
    HemisphereScan,
    MasterCurve,
    GillespieCurve,
    ContinuumCurve,
    FactorizationStudy,
    VerifySuite,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::MeanfieldTrajectory,
        ExperimentKind::DephasingRateScan,
        ExperimentKind::HemisphereScan,
        ExperimentKind::MasterCurve,
        ExperimentKind::GillespieCurve,
        ExperimentKind::ContinuumCurve,
        ExperimentKind::FactorizationStudy,
        ExperimentKind::VerifySuite,
    ];

    /// Name used both in configs and as the CLI subcommand.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MeanfieldTrajectory => "meanfield-trajectory",
            ExperimentKind::DephasingRateScan => "dephasing-rate-scan",
            ExperimentKind::HemisphereScan => "hemisphere-scan",
            ExperimentKind::MasterCurve => "master-curve",
            ExperimentKind::GillespieCurve => "gillespie-curve",
            ExperimentKind::ContinuumCurve => "continuum-curve",
            ExperimentKind::FactorizationStudy => "factorization-study",
            ExperimentKind::VerifySuite => "verify",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelName {
    PairDecay,
    PairDephasing,
    SingletPurification,
}

impl ModelName {
    const ALL: [ModelName; 3] = [
        ModelName::PairDecay,
        ModelName::PairDephasing,
        ModelName::SingletPurification,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelName::PairDecay => "pair-decay",
            ModelName::PairDephasing => "pair-dephasing",
            ModelName::SingletPurification => "singlet-purification",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub kind: ModelName,
    pub gamma: f64,
    /// Required for, and only allowed with, pair dephasing.
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub model: ModelConfig,
    pub u0: [f64; 3],
    pub t_end: f64,
    pub dt: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateScanConfig {
    pub theta: f64,
    pub gamma: f64,
    pub u_z: Vec<f64>,
    /// Initial `u_x` where the ball leaves room for it.
    pub transverse: f64,
    /// Transverse part used at the poles, where there is no room.
    pub pole_offset: f64,
    pub t_max: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HemisphereConfig {
    pub initial_states: Vec<[f64; 3]>,
    pub t_end: f64,
    pub dt: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterCurveConfig {
    pub n_atoms: Vec<usize>,
    pub gamma: f64,
    pub t_end: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GillespieConfig {
    pub n_atoms: usize,
    pub gamma: f64,
    pub runs: usize,
    pub seed: u64,
    pub sample_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    PointMass {
        x0: f64,
    },
    Uniform,
    /// Density proportional to `x^(a−1) (1−x)^(b−1)`.
    Beta {
        a: f64,
        b: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumConfig {
    pub initial: InitialData,
    pub grid_points: usize,
    pub t_end: f64,
    pub samples: usize,
    /// Times at which the full density profile is written; densities only.
    pub profile_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationConfig {
    pub n_atoms: Vec<usize>,
    pub u0: [f64; 3],
    pub gamma: f64,
    pub t: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    MeanfieldTrajectory(TrajectoryConfig),
    DephasingRateScan(RateScanConfig),
    HemisphereScan(HemisphereConfig),
    MasterCurve(MasterCurveConfig),
    GillespieCurve(GillespieConfig),
    ContinuumCurve(ContinuumConfig),
    FactorizationStudy(FactorizationConfig),
    VerifySuite,
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::MeanfieldTrajectory(_) => ExperimentKind::MeanfieldTrajectory,
            Experiment::DephasingRateScan(_) => ExperimentKind::DephasingRateScan,
            Experiment::HemisphereScan(_) => ExperimentKind::HemisphereScan,
            Experiment::MasterCurve(_) => ExperimentKind::MasterCurve,
            Experiment::GillespieCurve(_) => ExperimentKind::GillespieCurve,
            Experiment::ContinuumCurve(_) => ExperimentKind::ContinuumCurve,
            Experiment::FactorizationStudy(_) => ExperimentKind::FactorizationStudy,
            Experiment::VerifySuite => ExperimentKind::VerifySuite,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Dotted field path; empty for document-level errors.
    pub path: String,
    pub message: String,
}

/// Every problem found in a config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl ValidationError {
    pub fn single(path: impl Into<String>, message: impl Into<String>) -> Self {
        ValidationError {
            violations: vec![Violation {
                path: path.into(),
                message: message.into(),
            }],
        }
    }

    /// Machine-readable report.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": "validation", "violations": self.violations }).to_string()
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            if v.path.is_empty() {
                write!(f, "{}", v.message)?;
            } else {
                write!(f, "{}: {}", v.path, v.message)?;
            }
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

#[derive(Default)]
struct Errs(Vec<Violation>);

impl Errs {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }
}

fn number(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Reads keys from one table and remembers which were consumed.
struct Fields<'t> {
    table: &'t Table,
    prefix: String,
    used: BTreeSet<&'static str>,
}

impl<'t> Fields<'t> {
    fn new(table: &'t Table, prefix: &str) -> Self {
        Fields {
            table,
            prefix: prefix.to_string(),
            used: BTreeSet::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn get(&mut self, key: &'static str) -> Option<&'t Value> {
        self.used.insert(key);
        self.table.get(key)
    }

    fn missing(&self, key: &str, errs: &mut Errs) {
        errs.push(self.path(key), "required field is missing");
    }

    fn opt_f64(&mut self, key: &'static str, errs: &mut Errs) -> Option<f64> {
        let v = self.get(key)?;
        let n = number(v);
        if n.is_none() {
            errs.push(
                self.path(key),
                format!("expected a number, found {}", v.type_str()),
            );
        }
        n
    }

    fn req_f64(&mut self, key: &'static str, errs: &mut Errs) -> Option<f64> {
        if self.table.contains_key(key) {
            self.opt_f64(key, errs)
        } else {
            self.used.insert(key);
            self.missing(key, errs);
            None
        }
    }

    fn f64_or(&mut self, key: &'static str, default: f64, errs: &mut Errs) -> Option<f64> {
        if self.table.contains_key(key) {
            self.opt_f64(key, errs)
        } else {
            self.used.insert(key);
            Some(default)
        }
    }

    fn u64_value(&self, path: String, v: &Value, errs: &mut Errs) -> Option<u64> {
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            Value::Integer(i) => {
                errs.push(path, format!("must be a nonnegative integer, got {i}"));
                None
            }
            other => {
                errs.push(
                    path,
                    format!("expected an integer, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn u64_or(&mut self, key: &'static str, default: u64, errs: &mut Errs) -> Option<u64> {
        match self.get(key) {
            None => Some(default),
            Some(v) => self.u64_value(self.path(key), v, errs),
        }
    }

    fn usize_or(&mut self, key: &'static str, default: usize, errs: &mut Errs) -> Option<usize> {
        self.u64_or(key, default as u64, errs).map(|v| v as usize)
    }

    fn array(&mut self, key: &'static str, errs: &mut Errs) -> Option<&'t Vec<Value>> {
        let v = self.get(key)?;
        match v {
            Value::Array(a) => Some(a),
            other => {
                errs.push(
                    self.path(key),
                    format!("expected an array, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn f64_list_or(
        &mut self,
        key: &'static str,
        default: &[f64],
        errs: &mut Errs,
    ) -> Option<Vec<f64>> {
        if !self.table.contains_key(key) {
            self.used.insert(key);
            return Some(default.to_vec());
        }
        let items = self.array(key, errs)?;
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        for (i, v) in items.iter().enumerate() {
            match number(v) {
                Some(x) => out.push(x),
                None => {
                    ok = false;
                    errs.push(
                        format!("{}[{i}]", self.path(key)),
                        format!("expected a number, found {}", v.type_str()),
                    );
                }
            }
        }
        ok.then_some(out)
    }

    fn usize_list_or(
        &mut self,
        key: &'static str,
        default: &[usize],
        errs: &mut Errs,
    ) -> Option<Vec<usize>> {
        if !self.table.contains_key(key) {
            self.used.insert(key);
            return Some(default.to_vec());
        }
        let items = self.array(key, errs)?;
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        for (i, v) in items.iter().enumerate() {
            match self.u64_value(format!("{}[{i}]", self.path(key)), v, errs) {
                Some(x) => out.push(x as usize),
                None => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn vec3_value(path: &str, v: &Value, errs: &mut Errs) -> Option<[f64; 3]> {
        let parsed = match v {
            Value::Array(a) if a.len() == 3 => {
                let xs: Vec<Option<f64>> = a.iter().map(number).collect();
                match xs[..] {
                    [Some(x), Some(y), Some(z)] => Some([x, y, z]),
                    _ => None,
                }
            }
            _ => None,
        };
        if parsed.is_none() {
            errs.push(path, "expected an array of three numbers");
        }
        parsed
    }

    fn vec3_or(
        &mut self,
        key: &'static str,
        default: Option<[f64; 3]>,
        errs: &mut Errs,
    ) -> Option<[f64; 3]> {
        match self.get(key) {
            Some(v) => Self::vec3_value(&self.path(key), v, errs),
            None => {
                if default.is_none() {
                    self.missing(key, errs);
                }
                default
            }
        }
    }

    fn vec3_list_or(
        &mut self,
        key: &'static str,
        default: &[[f64; 3]],
        errs: &mut Errs,
    ) -> Option<Vec<[f64; 3]>> {
        if !self.table.contains_key(key) {
            self.used.insert(key);
            return Some(default.to_vec());
        }
        let items = self.array(key, errs)?;
        let path = self.path(key);
        let parsed: Vec<Option<[f64; 3]>> = items
            .iter()
            .enumerate()
            .map(|(i, v)| Self::vec3_value(&format!("{path}[{i}]"), v, errs))
            .collect();
        parsed.into_iter().collect()
    }

    fn opt_str(&mut self, key: &'static str, errs: &mut Errs) -> Option<&'t str> {
        let v = self.get(key)?;
        match v {
            Value::String(s) => Some(s),
            other => {
                errs.push(
                    self.path(key),
                    format!("expected a string, found {}", other.type_str()),
                );
                None
            }
        }
    }

    fn opt_table(&mut self, key: &'static str, errs: &mut Errs) -> Option<&'t Table> {
        let v = self.get(key)?;
        match v {
            Value::Table(t) => Some(t),
            other => {
                errs.push(
                    self.path(key),
                    format!("expected a table, found {}", other.type_str()),
                );
                None
            }
        }
    }

    /// Reports keys that were present but never read.
    fn finish(self, errs: &mut Errs) {
        for key in self.table.keys() {
            if !self.used.contains(key.as_str()) {
                errs.push(self.path(key), "unknown field");
            }
        }
    }
}

fn check(ok: bool, path: &str, message: impl Into<String>, errs: &mut Errs) {
    if !ok {
        errs.push(path, message);
    }
}

fn positive(v: Option<f64>, path: &str, errs: &mut Errs) {
    if let Some(x) = v {
        check(
            x.is_finite() && x > 0.0,
            path,
            format!("must be finite and > 0, got {x}"),
            errs,
        );
    }
}

fn at_least(v: Option<usize>, min: usize, path: &str, errs: &mut Errs) {
    if let Some(n) = v {
        check(n >= min, path, format!("must be >= {min}, got {n}"), errs);
        check(
            n <= MAX_COUNT,
            path,
            format!("must be <= {MAX_COUNT}, got {n}"),
            errs,
        );
    }
}

fn in_ball(v: Option<[f64; 3]>, path: &str, errs: &mut Errs) {
    if let Some([x, y, z]) = v {
        let norm = (x * x + y * y + z * z).sqrt();
        check(
            norm.is_finite() && norm <= 1.0 + pairlind::qcore::BLOCH_NORM_TOL,
            path,
            format!("Bloch vector must satisfy |u| <= 1, got |u| = {norm}"),
            errs,
        );
    }
}

fn check_dt(dt: Option<f64>, horizon: Option<f64>, path: &str, errs: &mut Errs) {
    positive(dt, path, errs);
    if let (Some(dt), Some(h)) = (dt, horizon) {
        if dt > 0.0 && h.is_finite() && h > 0.0 {
            check(
                dt <= h,
                path,
                format!("must not exceed the time horizon {h}"),
                errs,
            );
            check(
                h / dt <= MAX_STEPS,
                path,
                format!("{h} / {dt} exceeds {MAX_STEPS:e} steps"),
                errs,
            );
        }
    }
}

fn sample_times(v: &Option<Vec<f64>>, path: &str, errs: &mut Errs) {
    if let Some(ts) = v {
        check(!ts.is_empty(), path, "must not be empty", errs);
        for (i, t) in ts.iter().enumerate() {
            check(
                t.is_finite() && *t >= 0.0,
                &format!("{path}[{i}]"),
                format!("must be finite and >= 0, got {t}"),
                errs,
            );
        }
        check(
            ts.windows(2).all(|w| w[1] > w[0]),
            path,
            "must be strictly increasing",
            errs,
        );
    }
}

fn parse_model(f: &mut Fields<'_>, errs: &mut Errs) -> Option<ModelConfig> {
    let Some(table) = f.opt_table("model", errs) else {
        if !f.table.contains_key("model") {
            f.missing("model", errs);
        }
        return None;
    };
    let mut m = Fields::new(table, "model");
    let kind = match m.opt_str("kind", errs) {
        None => {
            if !table.contains_key("kind") {
                m.missing("kind", errs);
            }
            None
        }
        Some(s) => {
            let k = ModelName::ALL.into_iter().find(|k| k.name() == s);
            if k.is_none() {
                let names: Vec<_> = ModelName::ALL.iter().map(|k| k.name()).collect();
                errs.push(
                    "model.kind",
                    format!("unknown model {s:?}; expected one of {}", names.join(", ")),
                );
            }
            k
        }
    };
    let gamma = m.f64_or("gamma", 1.0, errs);
    positive(gamma, "model.gamma", errs);
    let theta = m.opt_f64("theta", errs);
    match (kind, theta) {
        (Some(ModelName::PairDephasing), None) if !table.contains_key("theta") => {
            m.missing("theta", errs)
        }
        (Some(ModelName::PairDephasing), Some(th)) => check(
            th.is_finite() && th.sin().abs() >= 1e-12,
            "model.theta",
            format!("sin(theta) must be nonzero, got theta = {th}"),
            errs,
        ),
        (Some(k), _) if table.contains_key("theta") && k != ModelName::PairDephasing => errs.push(
            "model.theta",
            format!("only allowed for pair-dephasing, not {}", k.name()),
        ),
        _ => {}
    }
    m.finish(errs);
    Some(ModelConfig {
        kind: kind?,
        gamma: gamma?,
        theta,
    })
}

fn parse_trajectory(f: &mut Fields<'_>, errs: &mut Errs) -> Option<Experiment> {
    let model = parse_model(f, errs);
    let u0 = f.vec3_or("u0", None, errs);
    in_ball(u0, "u0", errs);
    let t_end = f.req_f64("t_end", errs);
    positive(t_end, "t_end", errs);
    let dt = f.f64_or("dt", pairlind::meanfield::DEFAULT_DT, errs);
    check_dt(dt, t_end, "dt", errs);
    let samples = f.usize_or("samples", 101, errs);
    at_least(samples, 2, "samples", errs);
    Some(Experiment::MeanfieldTrajectory(TrajectoryConfig {
        model: model?,
        u0: u0?,
        t_end: t_end?,
        dt: dt?,
        samples: samples?,
    }))
}

fn parse_rate_scan(f: &mut Fields<'_>, errs: &mut Errs) -> Option<Experiment> {
    let theta = f.req_f64("theta", errs);
    if let Some(th) = theta {
        check(
            th.is_finite() && th.sin().abs() >= 1e-12,
            "theta",
            format!("sin(theta) must be nonzero, got theta = {th}"),
            errs,
        );
    }
    let gamma = f.f64_or("gamma", 1.0, errs);
    positive(gamma, "gamma", errs);
    let u_z = f.f64_list_or("u_z", &[-1.0, -0.5, 0.0, 0.5, 1.0], errs);
    if let Some(zs) = &u_z {
        check(!zs.is_empty(), "u_z", "must not be empty", errs);
        for (i, z) in zs.iter().enumerate() {
            check(
                (-1.0..=1.0).contains(z),
                &format!("u_z[{i}]"),
                format!("must lie in [-1, 1], got {z}"),
                errs,
            );
        }
    }
    let transverse = f.f64_or("transverse", 0.5, errs);
    if let Some(x) = transverse {
        check(
            x > 0.0 && x <= 1.0,
            "transverse",
            format!("must lie in (0, 1], got {x}"),
            errs,
        );
    }
    let pole_offset = f.f64_or("pole_offset", 1e-6, errs);
    if let (Some(eps), Some(x)) = (pole_offset, transverse) {
        check(
            eps > 0.0 && eps <= x,
            "pole_offset",
            format!("must lie in (0, transverse], got {eps}"),
            errs,
        );
    }
    let t_max = f.f64_or("t_max", 40.0, errs);
    positive(t_max, "t_max", errs);
    let dt = f.f64_or("dt", pairlind::meanfield::DEFAULT_DT, errs);
    check_dt(dt, t_max, "dt", errs);
    Some(Experiment::DephasingRateScan(RateScanConfig {
        theta: theta?,
        gamma: gamma?,
        u_z: u_z?,
        transverse: transverse?,
        pole_offset: pole_offset?,
        t_max: t_max?,
        dt: dt?,
    }))
}

pub const DEFAULT_HEMISPHERE_STATES: [[f64; 3]; 3] =
    [[0.0, 0.0, 0.0], [0.6, 0.0, -0.2], [0.3, 0.4, 0.0]];

fn parse_hemisphere(f: &mut Fields<'_>, errs: &mut Errs) -> Option<Experiment> {
    let states = f.vec3_list_or("initial_states", &DEFAULT_HEMISPHERE_STATES, errs);
    if let Some(s) = &states {
        check(!s.is_empty(), "initial_states", "must not be empty", errs);
        for (i, u) in s.iter().enumerate() {
            in_ball(Some(*u), &format!("initial_states[{i}]"), errs);
        }
    }
    let t_end = f.f64_or("t_end", 20.0, errs);
    positive(t_end, "t_end", errs);
    let dt = f.f64_or("dt", pairlind::meanfield::DEFAULT_DT, errs);
    check_dt(dt, t_end, "dt", errs);
    let samples = f.usize_or("samples", 201, errs);
    at_least(samples, 2, "samples", errs);
    Some(Experiment::HemisphereScan(HemisphereConfig {
        initial_states: states?,
        t_end: t_end?,
        dt: dt?,
        samples: samples?,
    }))
}

fn even_atoms(n: usize, path: &str, errs: &mut Errs) {
    check(n >= 2, path, format!("N = {n} must be at least 2"), errs);
    check(
        n <= MAX_ATOMS,
        path,
        format!("N = {n} must be at most {MAX_ATOMS}"),
        errs,
    );
    check(
        n % 2 == 0,
        path,
        format!("N = {n} must be even (atoms decay in pairs)"),
        errs,
    );
}

fn parse_master(f: &mut Fields<'_>, errs: &mut Errs) -> Option<Experiment> {
    let n_atoms = f.usize_list_or("n_atoms", &[16, 64, 256], errs);
    if let Some(ns) = &n_atoms {
        check(!ns.is_empty(), "n_atoms", "must not be empty", errs);
        for (i, &n) in ns.iter().enumerate() {
            even_atoms(n, &format!("n_atoms[{i}]"), errs);
        }
        let distinct: BTreeSet<_> = ns.iter().collect();
        check(
            distinct.len() == ns.len(),
            "n_atoms",
            "values must be distinct",
            errs,
        );
    }
    let gamma = f.f64_or("gamma", 1.0, errs);
    positive(gamma, "gamma", errs);
    let t_end = f.f64_or("t_end", 10.0, errs);
    positive(t_end, "t_end", errs);
    let samples = f.usize_or("samples", 201, errs);
    at_least(samples, 2, "samples", errs);
    // Uniformization needs about γ·t·N/2 chain steps at the final time.
    if let (Some(ns), Some(g), Some(t)) = (&n_atoms, gamma, t_end) {
        let n_max = ns.iter().copied().max().unwrap_or(0) as f64;
        check(
            g * t * n_max <= 1e8,
            "t_end",
            format!("gamma * t_end * N = {:e} exceeds 1e8", g * t * n_max),
            errs,
        );
    }
    Some(Experiment::MasterCurve(MasterCurveConfig {
        n_atoms: n_atoms?,
        gamma: gamma?,
        t_end: t_end?,
        samples: samples?,
    }))
}

fn parse_gillespie(f: &mut Fields<'_>, errs: &mut Errs) -> Option<Experiment> {
    let n_atoms = f.usize_or("n_atoms", 1000, errs);
    if let Some(n) = n_atoms {
        even_atoms(n, "n_atoms", errs);
    }
    let gamma = f.f64_or("gamma", 1.0, errs);
    positive(gamma, "gamma", errs);
    let runs = f.usize_or("runs", 10_000, errs);
    at_least(runs, 2, "runs", errs);
    let seed = f.u64_or("seed", 0, errs);
    let times = f.f64_list_or("sample_times", &[0.5, 1.0, 2.0, 5.0], errs);
    sample_times(&times, "sample_times", errs);
    Some(Experiment::GillespieCurve(GillespieConfig {
        n_atoms: n_atoms?,
        gamma: gamma?,
        runs: runs?,
        seed: seed?,
        sample_times: times?,
    }))
}

fn parse_continuum(f: &mut Fields<'_>, errs: &mut Errs) -> Option<Experiment> {
    let initial_name = f.opt_str("initial", errs).unwrap_or("point-mass");
    let x0 = f.opt_f64("x0", errs);
    let a = f.opt_f64("beta_a", errs);
    let b = f.opt_f64("beta_b", errs);
    let stray = |key: &str, present: bool, errs: &mut Errs| {
        if present {
            errs.push(key, format!("not used by initial = {initial_name:?}"));
        }
    };
    let initial = match initial_name {
        "point-mass" => {
            stray("beta_a", a.is_some(), errs);
            stray("beta_b", b.is_some(), errs);
            let x0 = x0.unwrap_or(1.0);
            check(
                (0.0..=1.0).contains(&x0),
                "x0",
                format!("must lie in [0, 1], got {x0}"),
                errs,
            );
            Some(InitialData::PointMass { x0 })
        }
        "uniform" => {
            stray("x0", x0.is_some(), errs);
            stray("beta_a", a.is_some(), errs);
            stray("beta_b", b.is_some(), errs);
            Some(InitialData::Uniform)
        }
        "beta" => {
            stray("x0", x0.is_some(), errs);
            let (a, b) = (a.unwrap_or(4.0), b.unwrap_or(4.0));
            // Shapes below 1 put an integrable singularity on a grid node.
            check(
                a.is_finite() && a >= 1.0,
                "beta_a",
                format!("must be finite and >= 1, got {a}"),
                errs,
            );
            check(
                b.is_finite() && b >= 1.0,
                "beta_b",
                format!("must be finite and >= 1, got {b}"),
                errs,
            );
            Some(InitialData::Beta { a, b })
        }
        other => {
            errs.push(
                "initial",
                format!("unknown initial data {other:?}; expected point-mass, uniform or beta"),
            );
            None
        }
    };
    let grid_points = f.usize_or(
        "grid_points",
        pairlind::continuum::DEFAULT_GRID_POINTS,
        errs,
    );
    at_least(grid_points, 2, "grid_points", errs);
    let t_end = f.f64_or("t_end", 10.0, errs);
    positive(t_end, "t_end", errs);
    let samples = f.usize_or("samples", 201, errs);
    at_least(samples, 2, "samples", errs);
    let profile_times = f.f64_list_or("profile_times", &[], errs);
    if let Some(ts) = &profile_times {
        if !ts.is_empty() {
            sample_times(&profile_times, "profile_times", errs);
            if matches!(initial, Some(InitialData::PointMass { .. })) {
                errs.push("profile_times", "profiles need a density, not a point mass");
            }
        }
    }
    Some(Experiment::ContinuumCurve(ContinuumConfig {
        initial: initial?,
        grid_points: grid_points?,
        t_end: t_end?,
        samples: samples?,
        profile_times: profile_times?,
    }))
}

fn parse_factorization(f: &mut Fields<'_>, errs: &mut Errs) -> Option<Experiment> {
    let n_atoms = f.usize_list_or("n_atoms", &[4, 6, 8], errs);
    if let Some(ns) = &n_atoms {
        check(!ns.is_empty(), "n_atoms", "must not be empty", errs);
        for (i, &n) in ns.iter().enumerate() {
            check(
                (2..=MAX_EXACT_ATOMS).contains(&n),
                &format!("n_atoms[{i}]"),
                format!("N = {n} must lie in 2..={MAX_EXACT_ATOMS}"),
                errs,
            );
        }
    }
    let u0 = f.vec3_or("u0", Some([0.0, 0.0, -1.0]), errs);
    in_ball(u0, "u0", errs);
    let gamma = f.f64_or("gamma", 1.0, errs);
    positive(gamma, "gamma", errs);
    let t = f.f64_or("t", 1.0, errs);
    positive(t, "t", errs);
    let dt = f.f64_or("dt", 1e-3, errs);
    check_dt(dt, t, "dt", errs);
    Some(Experiment::FactorizationStudy(FactorizationConfig {
        n_atoms: n_atoms?,
        u0: u0?,
        gamma: gamma?,
        t: t?,
        dt: dt?,
    }))
}

/// Parses and validates a config, reporting every violation at once.
pub fn validate(text: &str) -> Result<ExperimentConfig, ValidationError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        ValidationError::single("", format!("parse error: {}", e.message()))
    })?;
    let mut errs = Errs::default();
    let mut f = Fields::new(&table, "");

    let kind = match f.opt_str("experiment", &mut errs) {
        None => {
            if !table.contains_key("experiment") {
                f.missing("experiment", &mut errs);
            }
            None
        }
        Some(name) => {
            let k = ExperimentKind::from_name(name);
            if k.is_none() {
                let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                errs.push(
                    "experiment",
                    format!(
                        "unknown experiment {name:?}; expected one of {}",
                        names.join(", ")
                    ),
                );
            }
            k
        }
    };
    let output_path = f.opt_str("output_path", &mut errs).map(PathBuf::from);
    if let Some(p) = &output_path {
        check(
            !p.as_os_str().is_empty(),
            "output_path",
            "must not be empty",
            &mut errs,
        );
    }
    let format = match f.opt_str("format", &mut errs) {
        None | Some("csv") => Some(Format::Csv),
        Some("json") => Some(Format::Json),
        Some(other) => {
            errs.push(
                "format",
                format!("unknown format {other:?}; expected csv or json"),
            );
            None
        }
    };

    let experiment = match kind {
        Some(ExperimentKind::MeanfieldTrajectory) => parse_trajectory(&mut f, &mut errs),
        Some(ExperimentKind::DephasingRateScan) => parse_rate_scan(&mut f, &mut errs),
        Some(ExperimentKind::HemisphereScan) => parse_hemisphere(&mut f, &mut errs),
        Some(ExperimentKind::MasterCurve) => parse_master(&mut f, &mut errs),
        Some(ExperimentKind::GillespieCurve) => parse_gillespie(&mut f, &mut errs),
        Some(ExperimentKind::ContinuumCurve) => parse_continuum(&mut f, &mut errs),
        Some(ExperimentKind::FactorizationStudy) => parse_factorization(&mut f, &mut errs),
        Some(ExperimentKind::VerifySuite) => Some(Experiment::VerifySuite),
        // Without a known experiment the remaining keys cannot be judged.
        None => return Err(ValidationError { violations: errs.0 }),
    };
    f.finish(&mut errs);

    match (experiment, format) {
        (Some(experiment), Some(format)) if errs.0.is_empty() => Ok(ExperimentConfig {
            experiment,
            output_path,
            format,
        }),
        _ => Err(ValidationError { violations: errs.0 }),
    }
}

/// [`validate`] for raw bytes, which must be UTF-8.
pub fn validate_bytes(bytes: &[u8]) -> Result<ExperimentConfig, ValidationError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ValidationError::single("", format!("config is not UTF-8: {e}")))?;
    validate(text)
}

fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| Value::Float(*x)).collect())
}

fn ints(xs: &[usize]) -> Value {
    Value::Array(xs.iter().map(|x| Value::Integer(*x as i64)).collect())
}

impl ExperimentConfig {
    /// Canonical TOML with every field spelled out; validates back to an
    /// equal config.
    pub fn to_toml(&self) -> String {
        let mut t = Table::new();
        t.insert(
            "experiment".into(),
            Value::String(self.experiment.kind().name().into()),
        );
        if let Some(p) = &self.output_path {
            t.insert(
                "output_path".into(),
                Value::String(p.to_string_lossy().into_owned()),
            );
        }
        t.insert("format".into(), Value::String(self.format.name().into()));
        let f = |v: f64| Value::Float(v);
        match &self.experiment {
            Experiment::MeanfieldTrajectory(c) => {
                let mut m = Table::new();
                m.insert("kind".into(), Value::String(c.model.kind.name().into()));
                m.insert("gamma".into(), f(c.model.gamma));
                if let Some(th) = c.model.theta {
                    m.insert("theta".into(), f(th));
                }
                t.insert("model".into(), Value::Table(m));
                t.insert("u0".into(), floats(&c.u0));
                t.insert("t_end".into(), f(c.t_end));
                t.insert("dt".into(), f(c.dt));
                t.insert("samples".into(), Value::Integer(c.samples as i64));
            }
            Experiment::DephasingRateScan(c) => {
                t.insert("theta".into(), f(c.theta));
                t.insert("gamma".into(), f(c.gamma));
                t.insert("u_z".into(), floats(&c.u_z));
                t.insert("transverse".into(), f(c.transverse));
                t.insert("pole_offset".into(), f(c.pole_offset));
                t.insert("t_max".into(), f(c.t_max));
                t.insert("dt".into(), f(c.dt));
            }
            Experiment::HemisphereScan(c) => {
                let states = c.initial_states.iter().map(|u| floats(u)).collect();
                t.insert("initial_states".into(), Value::Array(states));
                t.insert("t_end".into(), f(c.t_end));
                t.insert("dt".into(), f(c.dt));
                t.insert("samples".into(), Value::Integer(c.samples as i64));
            }
            Experiment::MasterCurve(c) => {
                t.insert("n_atoms".into(), ints(&c.n_atoms));
                t.insert("gamma".into(), f(c.gamma));
                t.insert("t_end".into(), f(c.t_end));
                t.insert("samples".into(), Value::Integer(c.samples as i64));
            }
            Experiment::GillespieCurve(c) => {
                t.insert("n_atoms".into(), Value::Integer(c.n_atoms as i64));
                t.insert("gamma".into(), f(c.gamma));
                t.insert("runs".into(), Value::Integer(c.runs as i64));
                // TOML integers are signed, so configs never carry larger seeds.
                t.insert(
                    "seed".into(),
                    Value::Integer(c.seed.min(i64::MAX as u64) as i64),
                );
                t.insert("sample_times".into(), floats(&c.sample_times));
            }
            Experiment::ContinuumCurve(c) => {
                match c.initial {
                    InitialData::PointMass { x0 } => {
                        t.insert("initial".into(), Value::String("point-mass".into()));
                        t.insert("x0".into(), f(x0));
                    }
                    InitialData::Uniform => {
                        t.insert("initial".into(), Value::String("uniform".into()));
                    }
                    InitialData::Beta { a, b } => {
                        t.insert("initial".into(), Value::String("beta".into()));
                        t.insert("beta_a".into(), f(a));
                        t.insert("beta_b".into(), f(b));
                    }
                }
                t.insert("grid_points".into(), Value::Integer(c.grid_points as i64));
                t.insert("t_end".into(), f(c.t_end));
                t.insert("samples".into(), Value::Integer(c.samples as i64));
                t.insert("profile_times".into(), floats(&c.profile_times));
            }
            Experiment::FactorizationStudy(c) => {
                t.insert("n_atoms".into(), ints(&c.n_atoms));
                t.insert("u0".into(), floats(&c.u0));
                t.insert("gamma".into(), f(c.gamma));
                t.insert("t".into(), f(c.t));
                t.insert("dt".into(), f(c.dt));
            }
            Experiment::VerifySuite => {}
        }
        toml::to_string(&t).expect("a table of plain values always serializes")
    }
}
