//! Experiment configuration: a versioned JSON schema, strict validation with
//! field paths, and a deterministic fingerprint of the fully resolved config.

use crate::model::{BoundaryMode, Lattice, MagneticField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;

/// Schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Every experiment the runner can dispatch.
pub const EXPERIMENTS: [&str; 11] = [
    "spectrum",
    "dos",
    "chern",
    "magnetization",
    "streda",
    "ccmeasure",
    "pump",
    "superadiabatic",
    "edge",
    "susceptibility",
    "localization",
];

/// Uniform grid `start, …, stop` with `count` points.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl LinearGrid {
    pub fn resolve(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + step * i as f64).collect()
    }
}

/// A parameter grid: either an explicit list of values or a linear ramp.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values(Vec<f64>),
    Linear(LinearGrid),
}

impl GridSpec {
    pub fn resolve(&self) -> Vec<f64> {
        match self {
            GridSpec::Values(v) => v.clone(),
            GridSpec::Linear(l) => l.resolve(),
        }
    }
}

/// Model selection: a catalog name plus a numeric parameter map. Unknown
/// parameter names are rejected; missing ones take the catalog defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// Finite lattice: extents per axis and a boundary mode per axis
/// (`"open"` or `"periodic"`). The orbital dimension comes from the model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub extents: Vec<usize>,
    pub boundary: Vec<String>,
}

impl LatticeSpec {
    pub fn boundary_modes(&self) -> Option<Vec<BoundaryMode>> {
        self.boundary
            .iter()
            .map(|s| match s.as_str() {
                "open" => Some(BoundaryMode::Open),
                "periodic" => Some(BoundaryMode::Periodic),
                _ => None,
            })
            .collect()
    }

    pub fn build(&self, internal_dim: usize) -> crate::Result<Lattice> {
        let modes = self.boundary_modes().ok_or_else(|| {
            crate::Error::Config("boundary entries must be \"open\" or \"periodic\"".into())
        })?;
        Lattice::new(self.extents.len(), &self.extents, &modes, internal_dim)
    }
}

/// Perpendicular magnetic field strength, either a single value or a sweep.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default)]
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<LinearGrid>,
}

impl FieldSpec {
    /// Sweep values when present, the single value otherwise.
    pub fn values(&self) -> Vec<f64> {
        match &self.sweep {
            Some(grid) => grid.resolve(),
            None => vec![self.b],
        }
    }
}

/// On-site disorder drawn per seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    /// `"none"` or `"uniform"` (i.i.d. on `[-strength/2, strength/2]`).
    #[serde(default = "default_disorder_kind")]
    pub kind: String,
    #[serde(default)]
    pub strength: f64,
}

fn default_disorder_kind() -> String {
    "none".into()
}

impl Default for DisorderSpec {
    fn default() -> Self {
        DisorderSpec {
            kind: default_disorder_kind(),
            strength: 0.0,
        }
    }
}

/// Disorder ensemble: `n_seeds` realizations seeded `base_seed, base_seed+1, …`
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    #[serde(default = "default_n_seeds")]
    pub n_seeds: usize,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub disorder: DisorderSpec,
}

fn default_n_seeds() -> usize {
    1
}
fn default_base_seed() -> u64 {
    1
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            n_seeds: default_n_seeds(),
            base_seed: default_base_seed(),
            disorder: DisorderSpec::default(),
        }
    }
}

impl EnsembleSpec {
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64).map(|k| self.base_seed + k).collect()
    }
}

/// Numerical knobs shared across experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSpec {
    /// Central-difference step for field and chemical-potential derivatives.
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    /// Cells stripped from every open boundary before tracing.
    #[serde(default = "default_window_margin")]
    pub window_margin: usize,
    /// Energy bins for histograms and correlation measures.
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Propagator step factor (fraction of the fast period per step).
    #[serde(default = "default_solver_step")]
    pub solver_step: f64,
    /// Time-grid intervals for path sampling (even, ≥ 8).
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Momentum grid per axis for translation-invariant routes.
    #[serde(default = "default_n_k")]
    pub n_k: usize,
    /// Rows of the boundary layer traced by edge experiments
    /// (default: a third of the open extent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_depth: Option<usize>,
    /// Named tolerance overrides, e.g. `{"ccm_validate": 1e-8}`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

fn default_fd_step() -> f64 {
    1e-4
}
fn default_window_margin() -> usize {
    2
}
fn default_bins() -> usize {
    64
}
fn default_solver_step() -> f64 {
    crate::dynamics::DEFAULT_STEP_FACTOR
}
fn default_steps() -> usize {
    64
}
fn default_n_k() -> usize {
    24
}

impl Default for NumericsSpec {
    fn default() -> Self {
        NumericsSpec {
            fd_step: default_fd_step(),
            window_margin: default_window_margin(),
            bins: default_bins(),
            solver_step: default_solver_step(),
            steps: default_steps(),
            n_k: default_n_k(),
            edge_depth: None,
            tolerances: BTreeMap::new(),
        }
    }
}

impl NumericsSpec {
    pub fn tolerance(&self, name: &str, fallback: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(fallback)
    }
}

/// Slow-drive parameters for `pump` and `superadiabatic`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// Expansion orders for the superadiabatic construction.
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    /// Deform the drive so every time derivative vanishes at the endpoints.
    #[serde(default = "default_flatten")]
    pub flatten: bool,
}

fn default_period() -> f64 {
    1.0
}
fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.05, 0.025]
}
fn default_orders() -> Vec<usize> {
    vec![1]
}
fn default_flatten() -> bool {
    true
}

impl Default for DriveSpec {
    fn default() -> Self {
        DriveSpec {
            period: default_period(),
            epsilons: default_epsilons(),
            orders: default_orders(),
            flatten: default_flatten(),
        }
    }
}

/// Complete experiment description. Unknown keys are rejected at every level;
/// optional sections take documented defaults, and serializing the parsed
/// config back out yields the fully resolved form that records embed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema: u32,
    pub experiment: String,
    pub model: ModelSpec,
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub field: FieldSpec,
    /// Inverse-temperature grid (omit for ground-state routes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<GridSpec>,
    /// Chemical-potential grid (default: the single point 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<GridSpec>,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub numerics: NumericsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSpec>,
    /// Directory records are written into (overridden by `--out`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn betas(&self) -> Vec<f64> {
        self.beta
            .as_ref()
            .map(|g| g.resolve())
            .unwrap_or_else(|| vec![default_beta()])
    }

    pub fn mus(&self) -> Vec<f64> {
        self.mu.as_ref().map(|g| g.resolve()).unwrap_or_else(|| vec![0.0])
    }

    pub fn drive(&self) -> DriveSpec {
        self.drive.clone().unwrap_or_default()
    }

    /// The config with every default filled in, as a canonical JSON value
    /// (object keys sorted by the serializer).
    pub fn resolved(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialization cannot fail")
    }

    /// Hex SHA-256 of the resolved config — stable across runs and machines.
    pub fn fingerprint(&self) -> String {
        let canonical =
            serde_json::to_string(&self.resolved()).expect("value serialization cannot fail");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            write!(out, "{byte:02x}").expect("hex formatting cannot fail");
        }
        out
    }
}

fn default_beta() -> f64 {
    10.0
}

/// One problem found during validation, rooted at a config field path.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationIssue {
    pub path: String,
    pub message: String,
}

/// All problems found during validation; empty means the config is runnable.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            path: path.to_string(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return writeln!(f, "configuration valid");
        }
        writeln!(f, "{} validation issue(s):", self.issues.len())?;
        for issue in &self.issues {
            let path = if issue.path.is_empty() { "(config)" } else { &issue.path };
            writeln!(f, "  {path}: {}", issue.message)?;
        }
        Ok(())
    }
}

/// Models the runner can build, with their parameter names, defaults, and
/// admissible lattice dimensions.
pub struct ModelInfo {
    pub name: &'static str,
    pub params: &'static [(&'static str, f64)],
    pub dims: (usize, usize),
    pub internal_dim: usize,
    pub note: &'static str,
}

pub const MODELS: [ModelInfo; 5] = [
    ModelInfo {
        name: "haldane",
        params: &[
            ("t1", 1.0),
            ("t2", 0.0),
            ("phi", std::f64::consts::FRAC_PI_2),
            ("m", 0.0),
        ],
        dims: (2, 2),
        internal_dim: 2,
        note: "two-orbital hexagonal model with complex next-neighbor hops",
    },
    ModelInfo {
        name: "hofstadter",
        params: &[("t", 1.0)],
        dims: (2, 2),
        internal_dim: 1,
        note: "square-lattice nearest-neighbor hops; field enters through phases",
    },
    ModelInfo {
        name: "rice_mele",
        params: &[("t", 1.0), ("delta", 0.4), ("stagger", 0.6)],
        dims: (1, 1),
        internal_dim: 2,
        note: "dimerized chain with staggered on-site energies",
    },
    ModelInfo {
        name: "anderson",
        params: &[("t", 1.0)],
        dims: (1, 3),
        internal_dim: 1,
        note: "scalar nearest-neighbor hops in any dimension",
    },
    ModelInfo {
        name: "two_level",
        params: &[("v", 1.0), ("delta0", 0.5)],
        dims: (1, 3),
        internal_dim: 2,
        note: "driven two-level system (superadiabatic only; lattice ignored)",
    },
];

pub fn model_info(name: &str) -> Option<&'static ModelInfo> {
    MODELS.iter().find(|m| m.name == name)
}

impl ModelSpec {
    /// Parameter value with the catalog default as fallback.
    pub fn param(&self, name: &str) -> f64 {
        if let Some(&v) = self.params.get(name) {
            return v;
        }
        model_info(&self.name)
            .and_then(|info| info.params.iter().find(|(p, _)| *p == name))
            .map(|(_, d)| *d)
            .unwrap_or(0.0)
    }
}

const TOP_LEVEL_REQUIRED: [&str; 4] = ["schema", "experiment", "model", "lattice"];
const TOP_LEVEL_KNOWN: [&str; 11] = [
    "schema",
    "experiment",
    "model",
    "lattice",
    "field",
    "beta",
    "mu",
    "ensemble",
    "numerics",
    "drive",
    "output",
];

/// Parse and validate a raw JSON config. Returns the typed config when the
/// text parses, together with every issue found; the config is runnable only
/// when the report is clean.
pub fn validate_str(raw: &str) -> (Option<ExperimentConfig>, ValidationReport) {
    let mut report = ValidationReport::default();
    let value: serde_json::Value = match serde_json::from_str(raw) {
        Ok(v) => v,
        Err(e) => {
            report.push("", format!("invalid JSON: {e}"));
            return (None, report);
        }
    };

    let Some(map) = value.as_object() else {
        report.push("", "config must be a JSON object");
        return (None, report);
    };
    for key in TOP_LEVEL_REQUIRED {
        if !map.contains_key(key) {
            report.push(key, "missing required field");
        }
    }
    for key in map.keys() {
        if !TOP_LEVEL_KNOWN.contains(&key.as_str()) {
            report.push(key, "unknown field");
        }
    }
    if let Some(model) = map.get("model").and_then(|v| v.as_object()) {
        if !model.contains_key("name") {
            report.push("model.name", "missing required field");
        }
    }
    if let Some(lattice) = map.get("lattice").and_then(|v| v.as_object()) {
        for key in ["extents", "boundary"] {
            if !lattice.contains_key(key) {
                report.push(&format!("lattice.{key}"), "missing required field");
            }
        }
    }
    if !report.ok() {
        return (None, report);
    }

    let config: ExperimentConfig = match serde_json::from_value(value) {
        Ok(c) => c,
        Err(e) => {
            report.push("", format!("schema error: {e}"));
            return (None, report);
        }
    };
    validate_config(&config, &mut report);
    (Some(config), report)
}

/// Semantic validation of a parsed config.
pub fn validate_config(config: &ExperimentConfig, report: &mut ValidationReport) {
    if config.schema != SCHEMA_VERSION {
        report.push(
            "schema",
            format!("unsupported schema version {} (this build reads {SCHEMA_VERSION})", config.schema),
        );
    }
    if !EXPERIMENTS.contains(&config.experiment.as_str()) {
        report.push(
            "experiment",
            format!(
                "unknown experiment {:?}; available: {}",
                config.experiment,
                EXPERIMENTS.join(", ")
            ),
        );
    }

    let info = model_info(&config.model.name);
    match info {
        None => report.push(
            "model.name",
            format!(
                "unknown model {:?}; available: {}",
                config.model.name,
                MODELS.iter().map(|m| m.name).collect::<Vec<_>>().join(", ")
            ),
        ),
        Some(info) => {
            for (key, value) in &config.model.params {
                if !info.params.iter().any(|(p, _)| p == key) {
                    report.push(
                        &format!("model.params.{key}"),
                        format!(
                            "unknown parameter for {:?}; expected one of: {}",
                            info.name,
                            info.params
                                .iter()
                                .map(|(p, _)| *p)
                                .collect::<Vec<_>>()
                                .join(", ")
                        ),
                    );
                }
                if !value.is_finite() {
                    report.push(&format!("model.params.{key}"), "must be finite");
                }
            }
        }
    }

    validate_lattice(config, info, report);
    validate_field(config, report);
    validate_grids(config, report);
    validate_ensemble(config, report);
    validate_numerics(config, report);
    validate_drive(config, report);
    validate_experiment_requirements(config, report);
}

fn validate_lattice(
    config: &ExperimentConfig,
    info: Option<&'static ModelInfo>,
    report: &mut ValidationReport,
) {
    let lat = &config.lattice;
    let dim = lat.extents.len();
    if !(1..=3).contains(&dim) {
        report.push("lattice.extents", format!("dimension must be 1–3, got {dim}"));
    }
    if lat.boundary.len() != dim {
        report.push(
            "lattice.boundary",
            format!("needs one entry per axis ({dim}), got {}", lat.boundary.len()),
        );
    }
    for (axis, mode) in lat.boundary.iter().enumerate() {
        if mode != "open" && mode != "periodic" {
            report.push(
                &format!("lattice.boundary[{axis}]"),
                format!("must be \"open\" or \"periodic\", got {mode:?}"),
            );
        }
    }
    for (axis, &ext) in lat.extents.iter().enumerate() {
        if ext == 0 {
            report.push(&format!("lattice.extents[{axis}]"), "must be positive");
        } else if ext == 1 && lat.boundary.get(axis).map(String::as_str) == Some("periodic") {
            report.push(
                &format!("lattice.extents[{axis}]"),
                "a periodic axis needs extent ≥ 2",
            );
        }
    }
    if let Some(info) = info {
        // The two-level drive carries its own fixed two-state space.
        if info.name != "two_level" && !(info.dims.0..=info.dims.1).contains(&dim) {
            report.push(
                "lattice.extents",
                format!(
                    "model {:?} needs dimension {}–{}, got {dim}",
                    info.name, info.dims.0, info.dims.1
                ),
            );
        }
    }
}

fn validate_field(config: &ExperimentConfig, report: &mut ValidationReport) {
    let info = model_info(&config.model.name);
    let internal = info.map(|i| i.internal_dim).unwrap_or(1);
    let Ok(lattice) = config.lattice.build(internal) else {
        return; // structural issues already reported
    };
    for (i, b) in config.field.values().iter().enumerate() {
        if !b.is_finite() {
            report.push("field", "field values must be finite");
            return;
        }
        let field = MagneticField::perpendicular(*b);
        if let Err(e) = lattice.validate_field(&field) {
            let path = if config.field.sweep.is_some() {
                format!("field.sweep[{i}]")
            } else {
                "field.b".to_string()
            };
            report.push(&path, e.to_string());
            return; // one named violation suffices
        }
    }
}

fn validate_grids(config: &ExperimentConfig, report: &mut ValidationReport) {
    for (name, grid) in [("beta", &config.beta), ("mu", &config.mu)] {
        let Some(grid) = grid else { continue };
        let values = grid.resolve();
        if values.is_empty() {
            report.push(name, "grid must contain at least one value");
        }
        for v in &values {
            if v.is_nan() || (name == "mu" && !v.is_finite()) {
                report.push(name, "grid values must be finite");
                break;
            }
            if name == "beta" && *v <= 0.0 {
                report.push(name, "inverse temperatures must be positive");
                break;
            }
        }
        if let GridSpec::Linear(l) = grid {
            if l.count == 0 {
                report.push(name, "linear grid needs count ≥ 1");
            }
        }
    }
    if let Some(sweep) = &config.field.sweep {
        if sweep.count == 0 {
            report.push("field.sweep.count", "linear grid needs count ≥ 1");
        }
    }
}

fn validate_ensemble(config: &ExperimentConfig, report: &mut ValidationReport) {
    let ens = &config.ensemble;
    if ens.n_seeds == 0 {
        report.push("ensemble.n_seeds", "needs at least one seed");
    }
    match ens.disorder.kind.as_str() {
        "none" => {
            if ens.disorder.strength != 0.0 {
                report.push(
                    "ensemble.disorder.strength",
                    "must be 0 when kind is \"none\"",
                );
            }
        }
        "uniform" => {
            if ens.disorder.strength <= 0.0 || !ens.disorder.strength.is_finite() {
                report.push(
                    "ensemble.disorder.strength",
                    "uniform disorder needs a positive strength",
                );
            }
        }
        other => report.push(
            "ensemble.disorder.kind",
            format!("must be \"none\" or \"uniform\", got {other:?}"),
        ),
    }
}

fn validate_numerics(config: &ExperimentConfig, report: &mut ValidationReport) {
    let num = &config.numerics;
    if !(num.fd_step > 0.0 && num.fd_step.is_finite()) {
        report.push("numerics.fd_step", "must be positive and finite");
    }
    if num.bins == 0 {
        report.push("numerics.bins", "needs at least one bin");
    }
    if !(num.solver_step > 0.0 && num.solver_step.is_finite()) {
        report.push("numerics.solver_step", "must be positive and finite");
    }
    if num.steps < 8 || num.steps % 2 == 1 {
        report.push("numerics.steps", "time grid needs an even count ≥ 8");
    }
    if num.n_k < 2 {
        report.push("numerics.n_k", "momentum grid needs at least two points");
    }
    // A margin that consumes an open axis leaves nothing to trace over. Only
    // experiments that trace over a margined window are affected; the driven
    // ones use the full cell set (or no window at all).
    let uses_margined_window = !matches!(
        config.experiment.as_str(),
        "pump" | "superadiabatic" | "edge" | "spectrum"
    );
    if uses_margined_window {
        for (axis, &ext) in config.lattice.extents.iter().enumerate() {
            if config.lattice.boundary.get(axis).map(String::as_str) == Some("open")
                && ext > 0
                && 2 * num.window_margin >= ext
            {
                report.push(
                    "numerics.window_margin",
                    format!(
                        "margin {} empties open axis {axis} of extent {ext}",
                        num.window_margin
                    ),
                );
                break;
            }
        }
    }
}

fn validate_drive(config: &ExperimentConfig, report: &mut ValidationReport) {
    let Some(drive) = &config.drive else { return };
    if !(drive.period > 0.0 && drive.period.is_finite()) {
        report.push("drive.period", "must be positive and finite");
    }
    if drive.epsilons.is_empty() {
        report.push("drive.epsilons", "needs at least one value");
    }
    for (i, eps) in drive.epsilons.iter().enumerate() {
        if !(*eps > 0.0 && eps.is_finite()) {
            report.push(&format!("drive.epsilons[{i}]"), "must be positive and finite");
        }
    }
    if drive.orders.is_empty() {
        report.push("drive.orders", "needs at least one order");
    }
}

fn validate_experiment_requirements(config: &ExperimentConfig, report: &mut ValidationReport) {
    let dim = config.lattice.extents.len();
    let boundary = |axis: usize| config.lattice.boundary.get(axis).map(String::as_str);
    let model = config.model.name.as_str();
    let experiment = config.experiment.as_str();

    if model == "two_level" && experiment != "superadiabatic" {
        report.push("model.name", "two_level only supports the superadiabatic experiment");
    }

    match experiment {
        "chern" => {
            if dim < 2 {
                report.push("lattice.extents", "chern needs a 2- or 3-dimensional lattice");
            }
            for axis in [0, 1] {
                if boundary(axis) == Some("periodic") {
                    report.push(
                        &format!("lattice.boundary[{axis}]"),
                        "chern needs open boundaries on the invariant axes",
                    );
                }
            }
        }
        "streda" | "susceptibility" => {
            if dim < 2 {
                report.push("lattice.extents", "field derivatives need dimension ≥ 2");
            }
            if config.lattice.boundary.iter().any(|b| b == "periodic") {
                report.push(
                    "lattice.boundary",
                    "field derivatives need all axes open (arbitrary nearby field values)",
                );
            }
        }
        "edge" => {
            if dim != 2 {
                report.push("lattice.extents", "edge needs a 2-dimensional lattice");
            }
            for axis in 0..dim.min(2) {
                if boundary(axis) != Some("periodic") {
                    report.push(
                        &format!("lattice.boundary[{axis}]"),
                        "edge starts from a torus (the open axis is cut by the restriction)",
                    );
                }
            }
        }
        "pump" => {
            if model != "rice_mele" {
                report.push("model.name", "pump drives the rice_mele cycle");
            }
            if dim != 1 {
                report.push("lattice.extents", "pump needs a 1-dimensional chain");
            }
            if boundary(0) != Some("periodic") {
                report.push("lattice.boundary[0]", "pump needs a periodic chain");
            }
        }
        "superadiabatic" => {
            if model != "rice_mele" && model != "two_level" {
                report.push(
                    "model.name",
                    "superadiabatic drives rice_mele or two_level",
                );
            }
            if model == "rice_mele" && boundary(0) != Some("periodic") {
                report.push("lattice.boundary[0]", "the driven chain is periodic");
            }
        }
        "magnetization" | "ccmeasure" => {
            if dim < 2 {
                report.push("lattice.extents", "orbital responses need dimension ≥ 2");
            }
        }
        "localization" => {
            let values = config.mus();
            if config.mu.is_none() || values.len() < 2 {
                report.push(
                    "mu",
                    "localization needs an energy interval: a mu grid with ≥ 2 values",
                );
            }
        }
        _ => {}
    }

    if matches!(experiment, "pump" | "superadiabatic") {
        if config.ensemble.n_seeds != 1 || config.ensemble.disorder.kind != "none" {
            report.push("ensemble", "driven experiments run a single clean realization");
        }
    }
}
