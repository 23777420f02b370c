//! TOML scenario files.

use std::fmt;
use std::path::Path;

use memsteer::control::{ControlOperatorKind, Nonlinearity};
use memsteer::resolvent::TableRoute;
use memsteer::volterra::GridKind;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io { path: String, message: String },
    Parse { line: usize, column: usize, message: String },
    Validation { key: String, constraint: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => write!(f, "cannot read {path}: {message}"),
            ConfigError::Parse { line, column, message } => write!(f, "parse error at line {line}, column {column}: {message}"),
            ConfigError::Validation { key, constraint } => write!(f, "invalid `{key}`: {constraint}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Validation { key: key.to_string(), constraint: constraint.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub modes: usize,
    pub grid_points: usize,
    pub p: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self { modes: 8, grid_points: memsteer::spectral::DEFAULT_GRID_POINTS, p: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub horizon: f64,
    pub steps: usize,
    /// `uniform` or `graded`
    pub grid_kind: String,
    pub grading_exponent: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { horizon: 1.0, steps: 256, grid_kind: "uniform".into(), grading_exponent: 2.0 }
    }
}

impl TimeConfig {
    pub fn kind(&self) -> GridKind {
        match self.grid_kind.as_str() {
            "graded" => GridKind::Graded { exponent: self.grading_exponent },
            _ => GridKind::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolventConfig {
    /// `MLSeries`, `Contour` or `Volterra`
    pub route: String,
    pub tol: f64,
    /// Points of the uniform validation grid used by `resolvent-validate`.
    pub validation_points: usize,
    pub volterra_step: f64,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        Self { route: "MLSeries".into(), tol: 1e-16, validation_points: 33, volterra_step: 1.0 / 2048.0 }
    }
}

impl ResolventConfig {
    pub fn table_route(&self) -> TableRoute {
        TableRoute::parse(&self.route).unwrap_or(TableRoute::MLSeries)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControlConfig {
    /// `identity`, `reflected_greens` or `greens_diagonal`
    pub operator_kind: String,
    /// Modes (1-based) removed from the operator.
    pub killed_modes: Vec<usize>,
    pub lambda_sequence: Vec<f64>,
    pub picard_tol: f64,
    pub max_iter: usize,
    /// Random samples used by `criterion` in addition to the unit vectors.
    pub criterion_samples: usize,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            operator_kind: "identity".into(),
            killed_modes: Vec::new(),
            lambda_sequence: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            picard_tol: 1e-8,
            max_iter: 50,
            criterion_samples: 20,
        }
    }
}

impl ControlConfig {
    pub fn kind(&self) -> ControlOperatorKind {
        match self.operator_kind.as_str() {
            "reflected_greens" => ControlOperatorKind::ReflectedGreens,
            "greens_diagonal" => ControlOperatorKind::GreensDiagonal,
            _ => ControlOperatorKind::Identity,
        }
    }
}

/// Coefficient list or preset: `zero`, `single_mode(m)`, `decaying(c, rate)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Coefficients(Vec<f64>),
    Preset(String),
}

impl StateSpec {
    /// Coefficients on the first `modes` sine modes.
    pub fn resolve(&self, modes: usize) -> Result<DVector<f64>, String> {
        match self {
            StateSpec::Coefficients(c) => {
                if c.len() != modes {
                    return Err(format!("expected {modes} coefficients, found {}", c.len()));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err("coefficients must be finite".into());
                }
                Ok(DVector::from_column_slice(c))
            }
            StateSpec::Preset(s) => parse_preset(s, modes),
        }
    }
}

fn preset_args<'a>(s: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let rest = s.strip_prefix(name)?.trim();
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(str::trim).collect())
}

fn parse_preset(s: &str, modes: usize) -> Result<DVector<f64>, String> {
    let s = s.trim();
    if s == "zero" {
        return Ok(DVector::zeros(modes));
    }
    if let Some(args) = preset_args(s, "single_mode") {
        let m: usize = match args.as_slice() {
            [a] => a.parse().map_err(|_| format!("single_mode expects an integer mode, got `{a}`"))?,
            _ => return Err("single_mode takes one argument".into()),
        };
        if m == 0 || m > modes {
            return Err(format!("single_mode({m}) lies outside modes 1..={modes}"));
        }
        return Ok(DVector::from_fn(modes, |i, _| if i + 1 == m { 1.0 } else { 0.0 }));
    }
    if let Some(args) = preset_args(s, "decaying") {
        let (c, rate): (f64, f64) = match args.as_slice() {
            [a, b] => (a.parse().map_err(|_| format!("bad coefficient `{a}`"))?, b.parse().map_err(|_| format!("bad rate `{b}`"))?),
            _ => return Err("decaying takes two arguments (c, rate)".into()),
        };
        if !c.is_finite() || !rate.is_finite() {
            return Err("decaying arguments must be finite".into());
        }
        return Ok(DVector::from_fn(modes, |i, _| c / ((i + 1) as f64).powf(rate)));
    }
    Err(format!("unknown preset `{s}` (expected zero, single_mode(m) or decaying(c, rate))"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub zeta: StateSpec,
    pub zeta1: StateSpec,
    /// Relative terminal miss required at the smallest regularization.
    /// Defaults to 1e-3 for linear and 5e-3 for semilinear steering.
    pub miss_tolerance: Option<f64>,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self { zeta: StateSpec::Preset("single_mode(1)".into()), zeta1: StateSpec::Preset("decaying(1, 1)".into()), miss_tolerance: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearityConfig {
    /// `zero`, `sine_cosine` or `exp_decay_linear`
    pub kind: String,
    pub k0: Option<f64>,
    pub mu: Option<f64>,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self { kind: "zero".into(), k0: None, mu: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    /// Any of `csv`, `json`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: "out".into(), formats: vec!["csv".into(), "json".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub resolvent: ResolventConfig,
    #[serde(default)]
    pub control: ControlConfig,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub nonlinearity: NonlinearityConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

fn default_id() -> String {
    "scenario".into()
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("kernel", &["alpha", "beta", "nu"]),
    ("system", &["modes", "grid_points", "p"]),
    ("time", &["horizon", "steps", "grid_kind", "grading_exponent"]),
    ("resolvent", &["route", "tol", "validation_points", "volterra_step"]),
    ("control", &["operator_kind", "killed_modes", "lambda_sequence", "picard_tol", "max_iter", "criterion_samples"]),
    ("problem", &["zeta", "zeta1", "miss_tolerance"]),
    ("nonlinearity", &["kind", "k0", "mu"]),
    ("outputs", &["directory", "formats"]),
];

fn check_keys(value: &toml::Value) -> Result<(), ConfigError> {
    let top = value.as_table().ok_or_else(|| invalid("<root>", "expected a table"))?;
    for (key, v) in top {
        if key == "id" || key == "seed" {
            continue;
        }
        let Some((_, allowed)) = SECTIONS.iter().find(|(name, _)| name == key) else {
            return Err(invalid(key, "unknown key"));
        };
        let table = v.as_table().ok_or_else(|| invalid(key, "expected a table"))?;
        for inner in table.keys() {
            if !allowed.contains(&inner.as_str()) {
                return Err(invalid(&format!("{key}.{inner}"), "unknown key"));
            }
        }
    }
    if !top.contains_key("kernel") {
        return Err(invalid("kernel", "section is required"));
    }
    Ok(())
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

fn parse_error(text: &str, e: toml::de::Error) -> ConfigError {
    let (line, column) = e.span().map_or((0, 0), |s| position(text, s.start));
    ConfigError::Parse { line, column, message: e.message().to_string() }
}

/// Parses and validates scenario text.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let value: toml::Value = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    check_keys(&value)?;
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| parse_error(text, e))?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config_str(&text)
}

fn finite_positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be positive and finite (got {v})")))
    }
}

impl ScenarioConfig {
    /// Acceptance defaults: `(alpha, beta, nu) = (1, 0.5, 0.5)`.
    pub fn with_kernel(alpha: f64, beta: f64, nu: f64) -> Self {
        Self {
            id: default_id(),
            seed: 0,
            kernel: KernelConfig { alpha, beta, nu },
            system: SystemConfig::default(),
            time: TimeConfig::default(),
            resolvent: ResolventConfig::default(),
            control: ControlConfig::default(),
            problem: ProblemConfig::default(),
            nonlinearity: NonlinearityConfig::default(),
            outputs: OutputConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let k = &self.kernel;
        finite_positive("kernel.alpha", k.alpha)?;
        if !(k.beta >= 0.0 && k.beta.is_finite()) {
            return Err(invalid("kernel.beta", format!("beta must be nonnegative and finite (got {})", k.beta)));
        }
        if !(k.nu > 0.0 && k.nu < 1.0) {
            return Err(invalid("kernel.nu", format!("nu must lie in (0,1) (got {})", k.nu)));
        }
        let s = &self.system;
        if !(1..=32).contains(&s.modes) {
            return Err(invalid("system.modes", format!("modes must lie in 1..=32 (got {})", s.modes)));
        }
        if s.grid_points <= s.modes + 1 {
            return Err(invalid("system.grid_points", format!("grid_points must exceed modes + 1 (got {})", s.grid_points)));
        }
        if !(s.p >= 2.0 && s.p.is_finite()) {
            return Err(invalid("system.p", format!("p must be finite and at least 2 (got {})", s.p)));
        }
        let t = &self.time;
        finite_positive("time.horizon", t.horizon)?;
        if t.steps < 2 {
            return Err(invalid("time.steps", format!("steps must be at least 2 (got {})", t.steps)));
        }
        match t.grid_kind.as_str() {
            "uniform" => {}
            "graded" => {
                if !(t.grading_exponent >= 1.0 && t.grading_exponent.is_finite()) {
                    return Err(invalid("time.grading_exponent", format!("grading exponent must be at least 1 (got {})", t.grading_exponent)));
                }
            }
            other => return Err(invalid("time.grid_kind", format!("expected `uniform` or `graded` (got `{other}`)"))),
        }
        let r = &self.resolvent;
        let route = TableRoute::parse(&r.route).map_err(|_| invalid("resolvent.route", format!("expected MLSeries, Contour or Volterra (got `{}`)", r.route)))?;
        if route == TableRoute::Volterra && t.grid_kind != "uniform" {
            return Err(invalid("resolvent.route", "the Volterra route needs a uniform time grid"));
        }
        if !(r.tol > 0.0 && r.tol <= 1e-6) {
            return Err(invalid("resolvent.tol", format!("tol must lie in (0, 1e-6] (got {})", r.tol)));
        }
        if r.validation_points < 33 {
            return Err(invalid("resolvent.validation_points", format!("at least 33 points are needed (got {})", r.validation_points)));
        }
        finite_positive("resolvent.volterra_step", r.volterra_step)?;
        let c = &self.control;
        if !["identity", "reflected_greens", "greens_diagonal"].contains(&c.operator_kind.as_str()) {
            return Err(invalid("control.operator_kind", format!("expected identity, reflected_greens or greens_diagonal (got `{}`)", c.operator_kind)));
        }
        if let Some(bad) = c.killed_modes.iter().find(|&&m| m == 0 || m > s.modes) {
            return Err(invalid("control.killed_modes", format!("mode {bad} outside 1..={}", s.modes)));
        }
        if c.killed_modes.len() >= s.modes {
            return Err(invalid("control.killed_modes", "at least one mode must stay controlled"));
        }
        if c.lambda_sequence.is_empty() || c.lambda_sequence.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(invalid("control.lambda_sequence", "must be a nonempty list of positive numbers"));
        }
        if !c.lambda_sequence.windows(2).all(|w| w[1] < w[0]) {
            return Err(invalid("control.lambda_sequence", "must be strictly decreasing"));
        }
        finite_positive("control.picard_tol", c.picard_tol)?;
        if c.max_iter == 0 {
            return Err(invalid("control.max_iter", "must be at least 1"));
        }
        let p = &self.problem;
        p.zeta.resolve(s.modes).map_err(|e| invalid("problem.zeta", e))?;
        p.zeta1.resolve(s.modes).map_err(|e| invalid("problem.zeta1", e))?;
        if let Some(m) = p.miss_tolerance {
            finite_positive("problem.miss_tolerance", m)?;
        }
        self.nonlinearity_spec()?;
        let o = &self.outputs;
        if o.directory.is_empty() {
            return Err(invalid("outputs.directory", "must not be empty"));
        }
        if o.formats.is_empty() || o.formats.iter().any(|f| f != "csv" && f != "json") {
            return Err(invalid("outputs.formats", "expected a nonempty subset of [\"csv\", \"json\"]"));
        }
        Ok(())
    }

    pub fn nonlinearity_spec(&self) -> Result<Nonlinearity, ConfigError> {
        let n = &self.nonlinearity;
        match n.kind.as_str() {
            "zero" => Ok(Nonlinearity::Zero),
            "sine_cosine" => {
                let k0 = n.k0.ok_or_else(|| invalid("nonlinearity.k0", "required for sine_cosine"))?;
                finite_positive("nonlinearity.k0", k0)?;
                Ok(Nonlinearity::SineCosine { k0, horizon: self.time.horizon })
            }
            "exp_decay_linear" => {
                let mu = n.mu.ok_or_else(|| invalid("nonlinearity.mu", "required for exp_decay_linear"))?;
                finite_positive("nonlinearity.mu", mu)?;
                Ok(Nonlinearity::ExpDecayLinear { mu })
            }
            other => Err(invalid("nonlinearity.kind", format!("expected zero, sine_cosine or exp_decay_linear (got `{other}`)"))),
        }
    }

    pub fn has_format(&self, f: &str) -> bool {
        self.outputs.formats.iter().any(|x| x == f)
    }
}
