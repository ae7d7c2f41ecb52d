//! Experiment definitions in TOML.
//!
//! A config names a `model`, optionally a `preset` whose values fill everything not
//! given explicitly, and the sections `grid`, `hamiltonian`, `initial`, `time`,
//! `solver` and `tolerances`; no section nests deeper than one level. Parsing reports every violation it finds rather than
//! stopping at the first.

use std::fmt;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::presets;
use crate::hybrid::{pauli_x, pauli_y, pauli_z, HybridHamiltonian, HybridInitialState, KoopmanProfile};
use crate::koopman::QuadraticForm;
use crate::linalg;
use crate::nonlinear::TransportScheme;
use crate::phasespace::{DerivativeScheme, GridSpec};
use crate::timestep::{CflPolicy, StepOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Kvn,
    Kvh,
    Qcwe,
    Nqcle,
    Ehrenfest,
    QuantumRef,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Kvn => "kvn",
            Model::Kvh => "kvh",
            Model::Qcwe => "qcwe",
            Model::Nqcle => "nqcle",
            Model::Ehrenfest => "ehrenfest",
            Model::QuantumRef => "quantum_ref",
        }
    }

    /// Models whose state carries a quantum index.
    pub fn is_hybrid(self) -> bool {
        !matches!(self, Model::Kvn | Model::Kvh)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pauli {
    Identity,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Vec<Complex64> {
        match self {
            Pauli::Identity => linalg::identity(2),
            Pauli::X => pauli_x(),
            Pauli::Y => pauli_y(),
            Pauli::Z => pauli_z(),
        }
    }
}

/// Which matrix multiplies `H_I`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaChoice {
    #[default]
    None,
    X,
    Y,
    Z,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nq: usize,
    pub np: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub hbar: f64,
    pub scheme: DerivativeScheme,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::from(GridSpec::square(128, 16.0, 1.0))
    }
}

impl From<GridSpec> for GridConfig {
    fn from(s: GridSpec) -> Self {
        GridConfig {
            nq: s.nq,
            np: s.np,
            q_min: s.q_min,
            q_max: s.q_max,
            p_min: s.p_min,
            p_max: s.p_max,
            hbar: s.hbar,
            scheme: s.scheme,
        }
    }
}

impl GridConfig {
    pub fn spec(&self) -> GridSpec {
        GridSpec {
            nq: self.nq,
            np: self.np,
            q_min: self.q_min,
            q_max: self.q_max,
            p_min: self.p_min,
            p_max: self.p_max,
            hbar: self.hbar,
            scheme: self.scheme,
        }
    }
}

/// `f(q, p) · M` with `f` given by quadratic coefficients `[qq, pp, qp, q, p, c]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub coefficients: [f64; 6],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli: Option<Pauli>,
    /// Row-major `[re, im]` entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
}

impl TermConfig {
    fn matrix(&self) -> Result<Vec<Complex64>, String> {
        match (&self.pauli, &self.matrix) {
            (Some(p), None) => Ok(p.matrix()),
            (None, Some(m)) => Ok(m.iter().map(|e| Complex64::new(e[0], e[1])).collect()),
            _ => Err("each term needs exactly one of `pauli` or `matrix`".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    /// `H0` coefficients `[qq, pp, qp, q, p, c]`.
    pub h0: [f64; 6],
    #[serde(default)]
    pub h_i: [f64; 6],
    #[serde(default)]
    pub sigma: SigmaChoice,
    #[serde(default)]
    pub terms: Vec<TermConfig>,
}

impl Default for HamiltonianConfig {
    fn default() -> Self {
        HamiltonianConfig {
            h0: QuadraticForm::oscillator().coefficients(),
            h_i: [0.0; 6],
            sigma: SigmaChoice::None,
            terms: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Gaussian,
    Figure1Real,
    Figure1Matched,
}

fn unit() -> f64 {
    1.0
}
fn default_r0() -> f64 {
    6.5
}
fn default_r1() -> f64 {
    8.5
}

/// Initial state: a profile name with its parameters, times a spinor. `(q0, p0)` is
/// the Gaussian centre and the starting point of mean-field trajectories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub profile: ProfileKind,
    /// Quantum amplitudes `[re, im]`, normalized on use.
    pub spinor: Vec<[f64; 2]>,
    #[serde(default)]
    pub q0: f64,
    #[serde(default)]
    pub p0: f64,
    #[serde(default = "unit")]
    pub sigma: f64,
    #[serde(default)]
    pub k_q: f64,
    #[serde(default)]
    pub k_p: f64,
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default = "default_r1")]
    pub r1: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            profile: ProfileKind::Figure1Matched,
            spinor: vec![[1.0, 0.0], [1.0, 0.0]],
            q0: 0.0,
            p0: 0.0,
            sigma: 1.0,
            k_q: 0.0,
            k_p: 0.0,
            r0: 6.5,
            r1: 8.5,
        }
    }
}

impl InitialConfig {
    pub fn koopman_profile(&self) -> KoopmanProfile {
        match self.profile {
            ProfileKind::Gaussian => KoopmanProfile::Gaussian {
                q0: self.q0,
                p0: self.p0,
                sigma: self.sigma,
                k_q: self.k_q,
                k_p: self.k_p,
            },
            ProfileKind::Figure1Real => KoopmanProfile::Figure1Real,
            ProfileKind::Figure1Matched => KoopmanProfile::Figure1Matched { r0: self.r0, r1: self.r1 },
        }
    }

    pub fn gaussian(q0: f64, p0: f64, sigma: f64) -> Self {
        InitialConfig {
            profile: ProfileKind::Gaussian,
            spinor: vec![[1.0, 0.0]],
            q0,
            p0,
            sigma,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Defaults to `t_final` (initial and final checkpoints only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_interval: Option<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            dt: 1e-3,
            t_final: 1.0,
            checkpoint_interval: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub cfl: f64,
    pub cfl_policy: CflPolicy,
    /// Absolute density floor for the nonlinear solver; relative default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_rho: Option<f64>,
    pub transport: TransportScheme,
    pub n_osc: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl: 0.5,
            cfl_policy: CflPolicy::Abort,
            eps_rho: None,
            transport: TransportScheme::Spectral,
            n_osc: 32,
        }
    }
}

impl SolverConfig {
    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            cfl: self.cfl,
            policy: self.cfl_policy,
        }
    }
}

/// Run-time monitors; values are echoed in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest admissible fraction of mass in the boundary band (abort above).
    pub boundary_mass: f64,
    /// Width of the boundary band as a fraction of the grid.
    pub boundary_margin: f64,
    /// Oscillator tail mass that aborts the quantum reference.
    pub truncation_tail: f64,
    pub norm_drift: f64,
    pub energy_drift: f64,
    pub mass: f64,
    pub min_rho_c: f64,
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            boundary_mass: 1e-6,
            boundary_margin: 0.05,
            truncation_tail: 1e-8,
            norm_drift: 1e-8,
            energy_drift: 1e-6,
            mass: 1e-6,
            min_rho_c: -5e-3,
            psd: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub output: String,
    pub seed: u64,
    pub grid: GridConfig,
    pub hamiltonian: HamiltonianConfig,
    pub initial: InitialConfig,
    pub time: TimeConfig,
    pub solver: SolverConfig,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn new(model: Model) -> Self {
        ExperimentConfig {
            model,
            preset: None,
            output: format!("runs/{}", model.name()),
            seed: 0,
            grid: GridConfig::default(),
            hamiltonian: HamiltonianConfig::default(),
            initial: InitialConfig::default(),
            time: TimeConfig::default(),
            solver: SolverConfig::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn checkpoint_interval(&self) -> f64 {
        self.time.checkpoint_interval.unwrap_or(self.time.t_final)
    }

    /// Total steps and steps per checkpoint.
    pub fn step_counts(&self) -> (usize, usize) {
        let total = (self.time.t_final / self.time.dt).round() as usize;
        let every = (self.checkpoint_interval() / self.time.dt).round() as usize;
        (total, every.max(1))
    }

    /// Checkpoint times `0, Δ, 2Δ, …, t_final`, computed from step counts.
    pub fn checkpoint_times(&self) -> Vec<f64> {
        let (total, every) = self.step_counts();
        (0..=total / every).map(|k| (k * every) as f64 * self.time.dt).collect()
    }

    pub fn hbar(&self) -> f64 {
        self.grid.hbar
    }

    /// Scalar Hamiltonian for the classical models.
    pub fn scalar_hamiltonian(&self) -> QuadraticForm {
        QuadraticForm::from_coefficients(self.hamiltonian.h0)
    }

    /// Quantum dimension implied by the Hamiltonian section, falling back to the spinor.
    pub fn quantum_dim(&self) -> usize {
        if self.hamiltonian.sigma != SigmaChoice::None {
            return 2;
        }
        if let Some(t) = self.hamiltonian.terms.first() {
            if let Ok(m) = t.matrix() {
                return (m.len() as f64).sqrt().round() as usize;
            }
        }
        self.initial.spinor.len().max(1)
    }

    pub fn hybrid_hamiltonian(&self) -> crate::Result<HybridHamiltonian> {
        let hc = &self.hamiltonian;
        let h0 = QuadraticForm::from_coefficients(hc.h0);
        let h_i = QuadraticForm::from_coefficients(hc.h_i);
        let mut h = match hc.sigma {
            SigmaChoice::None => {
                let n = self.quantum_dim();
                let mut terms = vec![crate::hybrid::HamiltonianTerm {
                    function: h0.into(),
                    matrix: linalg::identity(n),
                }];
                if !h_i.is_zero() {
                    return Err(crate::Error::InvalidArgument("h_i requires a sigma choice".into()));
                }
                terms.retain(|t| !t.function.is_zero());
                HybridHamiltonian::new(n, terms)?
            }
            s => {
                let sigma = match s {
                    SigmaChoice::X => pauli_x(),
                    SigmaChoice::Y => pauli_y(),
                    _ => pauli_z(),
                };
                HybridHamiltonian::diagonal_family(h0.into(), h_i.into(), sigma)?
            }
        };
        for t in &hc.terms {
            let m = t.matrix().map_err(crate::Error::InvalidArgument)?;
            h = h.with_term(QuadraticForm::from_coefficients(t.coefficients).into(), m)?;
        }
        Ok(h)
    }

    pub fn initial_state(&self) -> HybridInitialState {
        HybridInitialState {
            profile: self.initial.koopman_profile(),
            spinor: self.initial.spinor.clone(),
        }
    }

    pub fn spinor(&self) -> crate::Result<Vec<Complex64>> {
        self.initial_state().spinor()
    }

    /// Every invariant violation of an already typed config.
    pub fn violations(&self) -> Vec<ConfigViolation> {
        let mut v = Vec::new();
        let t = &self.time;
        if !(t.t_final > 0.0) {
            v.push(ConfigViolation::NegativeDuration(t.t_final));
        }
        if !(t.dt > 0.0) {
            v.push(ConfigViolation::Invariant(format!("time.dt must be positive, got {}", t.dt)));
        }
        if let Some(c) = t.checkpoint_interval {
            if !(c > 0.0) {
                v.push(ConfigViolation::Invariant(format!(
                    "time.checkpoint_interval must be positive, got {c}"
                )));
            }
        }
        if t.t_final > 0.0 && t.dt > 0.0 && self.checkpoint_interval() > 0.0 {
            let whole = |x: f64| (x - x.round()).abs() <= 1e-9 * x.abs().max(1.0) && x.round() >= 1.0;
            if !whole(t.t_final / t.dt) {
                v.push(ConfigViolation::Invariant(format!(
                    "time.t_final = {} is not a whole number of steps dt = {}",
                    t.t_final, t.dt
                )));
            }
            let ci = self.checkpoint_interval();
            if !whole(ci / t.dt) || !whole(t.t_final / ci) {
                v.push(ConfigViolation::Invariant(format!(
                    "checkpoint_interval = {ci} must be a whole number of steps and divide t_final = {}",
                    t.t_final
                )));
            }
        }
        if let Err(e) = self.grid.spec().build() {
            v.push(ConfigViolation::Invariant(format!("grid: {e}")));
        }
        if let Err(e) = self.initial.koopman_profile().validate() {
            v.push(ConfigViolation::Invariant(format!("initial.profile: {e}")));
        }
        let s = &self.solver;
        if !(s.cfl > 0.0) {
            v.push(ConfigViolation::Invariant(format!("solver.cfl must be positive, got {}", s.cfl)));
        }
        if let Some(e) = s.eps_rho {
            if !(e > 0.0) {
                v.push(ConfigViolation::Invariant(format!("solver.eps_rho must be positive, got {e}")));
            }
        }
        if self.model == Model::QuantumRef && s.n_osc < 8 {
            v.push(ConfigViolation::Invariant(format!("solver.n_osc must be at least 8, got {}", s.n_osc)));
        }
        let tol = &self.tolerances;
        if !(tol.boundary_margin > 0.0 && tol.boundary_margin < 0.5) {
            v.push(ConfigViolation::Invariant(format!(
                "tolerances.boundary_margin must lie in (0, 0.5), got {}",
                tol.boundary_margin
            )));
        }
        if self.model.is_hybrid() {
            for (k, term) in self.hamiltonian.terms.iter().enumerate() {
                if let Err(e) = term.matrix() {
                    v.push(ConfigViolation::Invariant(format!("hamiltonian.terms[{k}]: {e}")));
                }
            }
            match self.hybrid_hamiltonian() {
                Ok(h) => {
                    if h.dim() != self.initial.spinor.len() {
                        v.push(ConfigViolation::Invariant(format!(
                            "initial.spinor has {} entries but the Hamiltonian acts on dimension {}",
                            self.initial.spinor.len(),
                            h.dim()
                        )));
                    }
                }
                Err(e) => v.push(ConfigViolation::Invariant(format!("hamiltonian: {e}"))),
            }
            if let Err(e) = self.spinor() {
                v.push(ConfigViolation::Invariant(format!("initial.spinor: {e}")));
            }
        } else if !self.hamiltonian.terms.is_empty() || self.hamiltonian.sigma != SigmaChoice::None {
            v.push(ConfigViolation::Invariant(format!(
                "model {} takes only hamiltonian.h0",
                self.model.name()
            )));
        }
        v
    }
}

/// One problem found while parsing or validating a config.
#[derive(Clone, Debug, PartialEq)]
pub enum ConfigViolation {
    Syntax(String),
    UnknownKey(String),
    MissingKey(String),
    TypeMismatch { section: String, message: String },
    UnknownPreset(String),
    NegativeDuration(f64),
    Invariant(String),
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigViolation::Syntax(m) => write!(f, "syntax: {m}"),
            ConfigViolation::UnknownKey(k) => write!(f, "unknown key `{k}`"),
            ConfigViolation::MissingKey(k) => write!(f, "missing key `{k}`"),
            ConfigViolation::TypeMismatch { section, message } => write!(f, "{section}: {message}"),
            ConfigViolation::UnknownPreset(p) => {
                write!(f, "unknown preset `{p}` (known: {})", presets::NAMES.join(", "))
            }
            ConfigViolation::NegativeDuration(t) => write!(f, "t_final must be positive, got {t}"),
            ConfigViolation::Invariant(m) => f.write_str(m),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<ConfigViolation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration problem(s):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

const TOP_KEYS: &[&str] = &[
    "model", "preset", "output", "seed", "grid", "hamiltonian", "initial", "time", "solver",
    "tolerances",
];
const SECTION_KEYS: &[(&str, &[&str])] = &[
    ("grid", &["nq", "np", "q_min", "q_max", "p_min", "p_max", "hbar", "scheme"]),
    ("hamiltonian", &["h0", "h_i", "sigma", "terms"]),
    ("initial", &["profile", "spinor", "q0", "p0", "sigma", "k_q", "k_p", "r0", "r1"]),
    ("time", &["dt", "t_final", "checkpoint_interval"]),
    ("solver", &["cfl", "cfl_policy", "eps_rho", "transport", "n_osc"]),
    (
        "tolerances",
        &[
            "boundary_mass", "boundary_margin", "truncation_tail", "norm_drift", "energy_drift",
            "mass", "min_rho_c", "psd",
        ],
    ),
];
const TERM_KEYS: &[&str] = &["coefficients", "pauli", "matrix"];

fn unknown_keys(root: &Table, out: &mut Vec<ConfigViolation>) {
    for k in root.keys() {
        if !TOP_KEYS.contains(&k.as_str()) {
            out.push(ConfigViolation::UnknownKey(k.clone()));
        }
    }
    for (section, keys) in SECTION_KEYS {
        let Some(Value::Table(t)) = root.get(*section) else {
            continue;
        };
        for k in t.keys() {
            if !keys.contains(&k.as_str()) {
                out.push(ConfigViolation::UnknownKey(format!("{section}.{k}")));
            }
        }
    }
    if let Some(Value::Table(h)) = root.get("hamiltonian") {
        if let Some(Value::Array(terms)) = h.get("terms") {
            for (i, term) in terms.iter().enumerate() {
                if let Value::Table(t) = term {
                    for k in t.keys() {
                        if !TERM_KEYS.contains(&k.as_str()) {
                            out.push(ConfigViolation::UnknownKey(format!("hamiltonian.terms[{i}].{k}")));
                        }
                    }
                }
            }
        }
    }
}

/// Tables merge key by key; everything else is replaced.
fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn section<T: DeserializeOwned + Default>(
    root: &Table,
    name: &str,
    out: &mut Vec<ConfigViolation>,
) -> T {
    match root.get(name) {
        None => T::default(),
        Some(v) => match v.clone().try_into::<T>() {
            Ok(t) => t,
            Err(e) => {
                out.push(ConfigViolation::TypeMismatch {
                    section: name.into(),
                    message: e.message().trim().to_string(),
                });
                T::default()
            }
        },
    }
}

fn to_table(cfg: &ExperimentConfig) -> Table {
    match Value::try_from(cfg).expect("config serializes") {
        Value::Table(t) => t,
        _ => unreachable!("config is a table"),
    }
}

/// Parses, expands presets and validates; returns every violation on failure.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let fail = |violations| Err(ConfigError { violations });
    let user: Table = match text.parse::<Table>() {
        Ok(t) => t,
        Err(e) => return fail(vec![ConfigViolation::Syntax(e.message().to_string())]),
    };
    let mut v = Vec::new();
    unknown_keys(&user, &mut v);

    let preset = match user.get("preset") {
        None => None,
        Some(Value::String(name)) => match presets::preset(name) {
            Some(cfg) => Some(cfg),
            None => {
                v.push(ConfigViolation::UnknownPreset(name.clone()));
                None
            }
        },
        Some(other) => {
            v.push(ConfigViolation::TypeMismatch {
                section: "preset".into(),
                message: format!("expected a string, found {}", other.type_str()),
            });
            None
        }
    };
    let mut root = preset.as_ref().map(to_table).unwrap_or_default();
    merge(&mut root, user);

    let model = match root.get("model") {
        None => {
            v.push(ConfigViolation::MissingKey("model".into()));
            None
        }
        Some(m) => match m.clone().try_into::<Model>() {
            Ok(m) => Some(m),
            Err(_) => {
                v.push(ConfigViolation::TypeMismatch {
                    section: "model".into(),
                    message: format!(
                        "expected one of kvn, kvh, qcwe, nqcle, ehrenfest, quantum_ref, found {m}"
                    ),
                });
                None
            }
        },
    };
    let mut cfg = ExperimentConfig::new(model.unwrap_or(Model::Kvh));
    cfg.preset = preset.and_then(|p| p.preset);
    match root.get("output") {
        None => {}
        Some(Value::String(s)) => cfg.output = s.clone(),
        Some(o) => v.push(ConfigViolation::TypeMismatch {
            section: "output".into(),
            message: format!("expected a string, found {}", o.type_str()),
        }),
    }
    match root.get("seed") {
        None => {}
        Some(Value::Integer(s)) if *s >= 0 => cfg.seed = *s as u64,
        Some(o) => v.push(ConfigViolation::TypeMismatch {
            section: "seed".into(),
            message: format!("expected a nonnegative integer, found {o}"),
        }),
    }
    cfg.grid = section(&root, "grid", &mut v);
    cfg.hamiltonian = section(&root, "hamiltonian", &mut v);
    cfg.initial = section(&root, "initial", &mut v);
    cfg.time = section(&root, "time", &mut v);
    cfg.solver = section(&root, "solver", &mut v);
    cfg.tolerances = section(&root, "tolerances", &mut v);

    if model.is_some() && v.is_empty() {
        v.extend(cfg.violations());
    }
    if v.is_empty() {
        Ok(cfg)
    } else {
        fail(v)
    }
}

/// Fully expanded TOML; `parse_config(&emit_config(c)) == c` for valid configs.
pub fn emit_config(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_kvh_config_is_valid() {
        let cfg = parse_config("model = \"kvh\"\n[hamiltonian]\nh0 = [0.5, 0.5, 0, 0, 0, 0]\n").unwrap();
        assert_eq!(cfg.model, Model::Kvh);
        assert_eq!(cfg.scalar_hamiltonian(), QuadraticForm::oscillator());
    }

    #[test]
    fn negative_duration_is_reported() {
        let err = parse_config("model = \"kvh\"\n[time]\nt_final = -1.0\ndt = 0.001\n").unwrap_err();
        assert!(err.violations.contains(&ConfigViolation::NegativeDuration(-1.0)));
    }

    #[test]
    fn figure1_preset_expands() {
        let cfg = parse_config("preset = \"figure1\"\n").unwrap();
        assert_eq!(cfg.model, Model::Qcwe);
        assert_eq!(cfg.hamiltonian.h0, [0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(cfg.hamiltonian.h_i, [0.25, -0.25, 0.0, 0.0, 0.0, 0.5]);
        assert_eq!(cfg.hamiltonian.sigma, SigmaChoice::Z);
        assert_eq!(cfg.time.t_final, 10.0);
        assert_eq!(cfg.checkpoint_times().len(), 11);
        assert_eq!(cfg.spinor().unwrap().len(), 2);
    }

    #[test]
    fn all_violations_are_collected() {
        let text = "model = \"qcwe\"\nbogus = 1\n[grid]\nnq = \"wide\"\nextra = 2\n[time]\nwhen = 3\n";
        let err = parse_config(text).unwrap_err();
        let v = &err.violations;
        assert!(v.contains(&ConfigViolation::UnknownKey("bogus".into())));
        assert!(v.contains(&ConfigViolation::UnknownKey("grid.extra".into())));
        assert!(v.contains(&ConfigViolation::UnknownKey("time.when".into())));
        assert!(v.iter().any(|x| matches!(x, ConfigViolation::TypeMismatch { section, .. } if section == "grid")));
    }

    #[test]
    fn invariant_violations_are_collected() {
        let text = "preset = \"figure1\"\n[time]\nt_final = 1.0\ndt = 0.3\n[solver]\ncfl = 0.0\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.violations.len() >= 2, "{err}");
    }

    #[test]
    fn unknown_preset_and_model() {
        let err = parse_config("preset = \"nope\"\nmodel = \"magic\"\n").unwrap_err();
        assert!(err.violations.contains(&ConfigViolation::UnknownPreset("nope".into())));
        assert!(err.violations.iter().any(|x| matches!(x, ConfigViolation::TypeMismatch { section, .. } if section == "model")));
    }

    #[test]
    fn emitted_configs_round_trip() {
        for name in presets::NAMES {
            let cfg = presets::preset(name).unwrap();
            let back = parse_config(&emit_config(&cfg)).unwrap();
            assert_eq!(back, cfg, "{name}");
        }
        let mut cfg = presets::preset("figure1").unwrap();
        cfg.hamiltonian.terms.push(TermConfig {
            coefficients: [0.0, 0.0, 0.0, 0.5, 0.0, 0.0],
            pauli: Some(Pauli::X),
            matrix: None,
        });
        cfg.solver.eps_rho = Some(1e-9);
        assert_eq!(parse_config(&emit_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn explicit_keys_override_preset() {
        let cfg = parse_config("preset = \"figure1\"\nmodel = \"ehrenfest\"\n[grid]\nnq = 64\nnp = 64\n").unwrap();
        assert_eq!(cfg.model, Model::Ehrenfest);
        assert_eq!(cfg.grid.nq, 64);
        assert_eq!(cfg.grid.q_max, 16.0);
    }

    #[test]
    fn term_requires_one_matrix_source() {
        let text = "preset = \"figure1\"\n[[hamiltonian.terms]]\ncoefficients = [0,0,0,1,0,0]\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.violations.iter().any(|v| v.to_string().contains("exactly one")), "{err}");
        let text = "preset = \"figure1\"\n[[hamiltonian.terms]]\ncoefficients = [0,0,0,1,0,0]\npauli = \"x\"\ncolour = 1\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.violations.contains(&ConfigViolation::UnknownKey("hamiltonian.terms[0].colour".into())));
    }
}
