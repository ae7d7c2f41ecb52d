//! The checkpoint driver: builds a simulation from a config, advances it between
//! checkpoints and writes `manifest.json`, `observables.csv` and field snapshots.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{emit_config, ConfigError, ExperimentConfig, Model, Tolerances};
use crate::error::{Error, Result};
use crate::hybrid::{
    bloch_and_purity, diagonal_channel_solve, energy_scale, hybrid_classical_density, hybrid_energy,
    qcwe_step, quantum_density, HybridFields, HybridHamiltonian, HybridWavefunction, QuantumDensityMatrix,
};
use crate::koopman::{
    characteristics_oracle, kvh_classical_density, kvn_density, liouville_advect, transport_oracle,
    HamiltonianFields, HamiltonianFunction, KoopmanSolver, QuadraticForm,
};
use crate::linalg;
use crate::nonlinear::{
    density_from_wavefunction, nqcle_step, HybridDensityField, NodeHamiltonian, NonlinearCorrection,
    NqcleOptions,
};
use crate::phasespace::calculus::boundary_fraction;
use crate::phasespace::{boundary_mass, ComplexField, MatrixField, PhaseSpaceGrid, RealField, Snapshot};
use crate::reference::{
    build_composite_hamiltonian, ehrenfest_energy, ehrenfest_step, spin_reduced_density,
    wigner_transform, CompositeQuantumState, EhrenfestState, QuantumPropagator,
};
use crate::timestep::StepOptions;

/// Prefix for relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "KHSIM_OUTPUT_ROOT";
pub const MANIFEST: &str = "manifest.json";
pub const OBSERVABLES: &str = "observables.csv";
pub const TRAJECTORY: &str = "trajectory.csv";
pub const ERROR_RECORD: &str = "error.json";
pub const CHECKPOINTS: &str = "checkpoints";

/// One row of `observables.csv`. Empty cells mean "not defined for this model".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub t: f64,
    pub n_x: Option<f64>,
    pub n_y: Option<f64>,
    pub n_z: Option<f64>,
    pub purity: Option<f64>,
    pub energy: f64,
    pub energy_scale: f64,
    pub total_norm: f64,
    pub min_rho_c: Option<f64>,
    pub rho_c_mass: Option<f64>,
    pub boundary_mass: Option<f64>,
    pub min_eig: Option<f64>,
    pub source: String,
}

impl ObservableRow {
    fn new(t: f64, source: &str) -> Self {
        ObservableRow {
            t,
            n_x: None,
            n_y: None,
            n_z: None,
            purity: None,
            energy: 0.0,
            energy_scale: 0.0,
            total_norm: 0.0,
            min_rho_c: None,
            rho_c_mass: None,
            boundary_mass: None,
            min_eig: None,
            source: source.into(),
        }
    }

    pub fn bloch(&self) -> Option<[f64; 3]> {
        Some([self.n_x?, self.n_y?, self.n_z?])
    }

    fn set_quantum(&mut self, rho: &QuantumDensityMatrix) {
        self.min_eig = Some(rho.min_eigenvalue());
        self.purity = Some(rho.purity());
        if let Ok(b) = bloch_and_purity(rho) {
            [self.n_x, self.n_y, self.n_z] = b.n.map(Some);
        }
    }

    fn set_density(&mut self, rho: &RealField, margin: f64) -> Result<()> {
        self.min_rho_c = Some(rho.min());
        self.rho_c_mass = Some(rho.integrate());
        let w: Vec<f64> = rho.data().iter().map(|x| x.abs()).collect();
        self.boundary_mass = Some(boundary_fraction(rho.grid(), &w, margin)?);
        Ok(())
    }
}

/// Per-step samples of a mean-field run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub q: f64,
    pub p: f64,
    pub n_x: Option<f64>,
    pub n_y: Option<f64>,
    pub n_z: Option<f64>,
    pub energy: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{error} (at t = {t})")]
    Numerical { error: Error, t: f64, dir: PathBuf },
    #[error("{0}")]
    Io(Error),
}

impl RunError {
    /// Process exit code: 2 config, 3 numerical invariant, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical { .. } => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.into())
    }
}

/// Machine-readable abort record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub invariant: String,
    pub message: String,
    pub t: f64,
    pub model: String,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub rows: Vec<ObservableRow>,
    pub wall_time: f64,
}

/// `dir` joined under `$KHSIM_OUTPUT_ROOT` when it is relative and the variable is set.
pub fn resolve_output(dir: &str) -> PathBuf {
    let p = PathBuf::from(dir);
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if p.is_relative() => PathBuf::from(root).join(p),
        _ => p,
    }
}

trait Simulation {
    /// Moves from `t0` to `t0 + steps·dt`; on failure returns the time reached.
    fn advance(&mut self, t0: f64, dt: f64, steps: usize) -> std::result::Result<(), (Error, f64)>;
    fn observe(&self, t: f64, tol: &Tolerances) -> Result<ObservableRow>;
    /// Writes checkpoint `k` and returns the file names.
    fn checkpoint(&self, dir: &Path, k: usize) -> Result<Vec<String>>;
    fn finish(&self, _dir: &Path) -> Result<()> {
        Ok(())
    }
    /// Caveats recorded in the manifest.
    fn notes(&self) -> Vec<String> {
        Vec::new()
    }
}

fn stepped(
    t0: f64,
    dt: f64,
    steps: usize,
    mut f: impl FnMut() -> Result<()>,
) -> std::result::Result<(), (Error, f64)> {
    for i in 0..steps {
        f().map_err(|e| (e, t0 + i as f64 * dt))?;
    }
    Ok(())
}

fn save(dir: &Path, name: String, snap: Snapshot) -> Result<String> {
    snap.save(dir.join(&name))?;
    Ok(name)
}

fn source_name(cfg: &ExperimentConfig, oracle: bool) -> &'static str {
    match (cfg.model, oracle) {
        (Model::QuantumRef, _) => "quantum",
        (Model::Ehrenfest, _) => "ehrenfest",
        (_, true) => "oracle",
        (m, false) => m.name(),
    }
}

// ----- classical Koopman wavefunctions -----

struct KoopmanSim {
    chi: ComplexField,
    h: QuadraticForm,
    kvh: bool,
    /// `None` for the exact solution, which is re-evaluated from the closed-form profile.
    fields: Option<(HamiltonianFields, StepOptions)>,
    profile: crate::hybrid::KoopmanProfile,
    hybrid: HybridFields,
    source: &'static str,
}

impl KoopmanSim {
    fn new(cfg: &ExperimentConfig, grid: &Arc<PhaseSpaceGrid>, oracle: bool) -> Result<Self> {
        let h = cfg.scalar_hamiltonian();
        let hf = HamiltonianFunction::from(h);
        let profile = cfg.initial.koopman_profile();
        Ok(KoopmanSim {
            chi: profile.sample(grid)?,
            h,
            kvh: cfg.model == Model::Kvh,
            fields: if oracle {
                None
            } else {
                Some((hf.on_grid(grid)?, cfg.solver.step_options()))
            },
            profile,
            hybrid: HybridHamiltonian::scalar(hf).on_grid(grid)?,
            source: source_name(cfg, oracle),
        })
    }
}

impl Simulation for KoopmanSim {
    fn advance(&mut self, t0: f64, dt: f64, steps: usize) -> std::result::Result<(), (Error, f64)> {
        let solver = if self.kvh {
            KoopmanSolver::Rk4Kvh
        } else {
            KoopmanSolver::Rk4Kvn
        };
        match &self.fields {
            Some((fields, opts)) => {
                let chi = &mut self.chi;
                stepped(t0, dt, steps, || {
                    *chi = crate::koopman::step(chi, fields, dt, solver, opts)?;
                    Ok(())
                })
            }
            None => {
                let t = t0 + steps as f64 * dt;
                let grid = self.chi.grid().clone();
                let exact = || -> Result<ComplexField> {
                    let chi0 = self.profile.evaluator(grid.hbar())?;
                    let hf = HamiltonianFunction::from(self.h);
                    if self.kvh {
                        characteristics_oracle(&grid, chi0, &hf, t)
                    } else {
                        transport_oracle(&grid, chi0, &hf, t)
                    }
                };
                self.chi = exact().map_err(|e| (e, t0))?;
                Ok(())
            }
        }
    }

    fn observe(&self, t: f64, tol: &Tolerances) -> Result<ObservableRow> {
        let chi = &self.chi;
        let mut row = ObservableRow::new(t, self.source);
        row.total_norm = chi.norm_sqr();
        // the one-level quantum density is the scalar ∫|χ|²
        row.min_eig = Some(row.total_norm);
        let rho = if self.kvh {
            let u = HybridWavefunction::new(vec![chi.clone()])?;
            row.energy = hybrid_energy(&u, &self.hybrid)?;
            row.energy_scale = energy_scale(&u, &self.hybrid);
            kvh_classical_density(chi)
        } else {
            // KvN conserves the mean classical energy ∫ H |χ|²
            let g = chi.grid();
            let (mut e, mut s) = (0.0, 0.0);
            for (k, (q, p)) in g.nodes().enumerate() {
                let w = chi.data()[k].norm_sqr();
                let h = self.h.eval(q, p);
                e += h * w;
                s += h.abs() * w;
            }
            row.energy = e * g.cell_area();
            row.energy_scale = s * g.cell_area();
            kvn_density(chi)
        };
        row.set_density(&rho.density, tol.boundary_margin)?;
        row.boundary_mass = Some(boundary_mass(chi, tol.boundary_margin)?);
        Ok(row)
    }

    fn checkpoint(&self, dir: &Path, k: usize) -> Result<Vec<String>> {
        let rho = if self.kvh {
            kvh_classical_density(&self.chi)
        } else {
            kvn_density(&self.chi)
        };
        Ok(vec![
            save(dir, format!("psi_{k:04}.kwph"), Snapshot::from_complex(&self.chi))?,
            save(dir, format!("rho_c_{k:04}.kwph"), Snapshot::from_real(&rho.density))?,
        ])
    }
}

// ----- hybrid wavefunctions -----

struct QcweSim {
    u: HybridWavefunction,
    fields: HybridFields,
    opts: StepOptions,
    /// Exact channel solution instead of time stepping.
    exact: Option<(HybridHamiltonian, crate::hybrid::HybridInitialState)>,
    source: &'static str,
}

impl QcweSim {
    fn new(cfg: &ExperimentConfig, grid: &Arc<PhaseSpaceGrid>, oracle: bool) -> Result<Self> {
        let h = cfg.hybrid_hamiltonian()?;
        let init = cfg.initial_state();
        if oracle && h.diagonal().is_none() {
            return Err(Error::InvalidArgument(
                "no exact solution: the Hamiltonian is not of the form H0 𝟙 + H_I Σ".into(),
            ));
        }
        Ok(QcweSim {
            u: init.sample(grid)?,
            fields: h.on_grid(grid)?,
            opts: cfg.solver.step_options(),
            exact: oracle.then_some((h, init)),
            source: source_name(cfg, oracle),
        })
    }
}

impl Simulation for QcweSim {
    fn advance(&mut self, t0: f64, dt: f64, steps: usize) -> std::result::Result<(), (Error, f64)> {
        match &self.exact {
            None => {
                let (u, fields, opts) = (&mut self.u, &self.fields, &self.opts);
                stepped(t0, dt, steps, || {
                    *u = qcwe_step(u, fields, dt, opts)?;
                    Ok(())
                })
            }
            Some((h, init)) => {
                let t = t0 + steps as f64 * dt;
                let grid = self.u.grid().clone();
                let solve = || diagonal_channel_solve(&grid, init.evaluator(grid.hbar())?, h, t);
                self.u = solve().map_err(|e| (e, t0))?;
                Ok(())
            }
        }
    }

    fn observe(&self, t: f64, tol: &Tolerances) -> Result<ObservableRow> {
        let mut row = ObservableRow::new(t, self.source);
        row.set_quantum(&quantum_density(&self.u));
        row.energy = hybrid_energy(&self.u, &self.fields)?;
        row.energy_scale = energy_scale(&self.u, &self.fields);
        row.total_norm = self.u.total_norm();
        row.set_density(&hybrid_classical_density(&self.u).density, tol.boundary_margin)?;
        row.boundary_mass = Some(boundary_fraction(self.u.grid(), &self.u.node_density(), tol.boundary_margin)?);
        Ok(row)
    }

    fn checkpoint(&self, dir: &Path, k: usize) -> Result<Vec<String>> {
        let rho = hybrid_classical_density(&self.u);
        Ok(vec![
            save(dir, format!("psi_{k:04}.kwph"), Snapshot::from_components(self.u.components())?)?,
            save(dir, format!("rho_c_{k:04}.kwph"), Snapshot::from_real(&rho.density))?,
        ])
    }
}

// ----- matrix-valued hybrid densities -----

/// Scalar classical part and constant quantum part of an uncoupled Hamiltonian
/// `H_c(q, p) 𝟙 + Ĥ_q`; `None` when some term couples the two.
pub fn split_uncoupled(h: &HybridHamiltonian) -> Option<(QuadraticForm, Vec<Complex64>)> {
    let n = h.dim();
    let mut hc = QuadraticForm::default();
    let mut hq = vec![Complex64::default(); n * n];
    for term in h.terms() {
        let f = *term.function.as_quadratic()?;
        let constant = QuadraticForm::constant(f.c);
        if f == constant {
            for (a, m) in hq.iter_mut().zip(&term.matrix) {
                *a += m * f.c;
            }
            continue;
        }
        let a = term.matrix[0];
        let scalar = (0..n).all(|j| {
            (0..n).all(|k| {
                let e = if j == k { a } else { Complex64::default() };
                (term.matrix[j * n + k] - e).norm() <= 1e-14
            })
        });
        if !scalar || a.im.abs() > 1e-14 {
            return None;
        }
        hc = hc.add(&f.scale(a.re));
    }
    Some((hc, hq))
}

/// `exp(−iĤt/ħ)` for a constant Hermitian matrix.
pub fn unitary(n: usize, h: &[Complex64], t: f64, hbar: f64) -> Vec<Complex64> {
    let (lam, v) = linalg::hermitian_eigen(n, h);
    let mut d = vec![Complex64::default(); n * n];
    for (i, l) in lam.iter().enumerate() {
        d[i * n + i] = Complex64::from_polar(1.0, -l * t / hbar);
    }
    linalg::matmul(n, &linalg::matmul(n, &v, &d), &linalg::adjoint(n, &v))
}

struct NqcleSim {
    p: HybridDensityField,
    h: NodeHamiltonian,
    opts: NqcleOptions,
    /// Uncoupled closed form: transported scalar density times a rotated spin state.
    exact: Option<(QuadraticForm, Vec<Complex64>, crate::hybrid::HybridInitialState)>,
    source: &'static str,
}

impl NqcleSim {
    fn new(cfg: &ExperimentConfig, grid: &Arc<PhaseSpaceGrid>, oracle: bool) -> Result<Self> {
        let h = cfg.hybrid_hamiltonian()?;
        let init = cfg.initial_state();
        let exact = if oracle {
            let (hc, hq) = split_uncoupled(&h).ok_or_else(|| {
                Error::InvalidArgument(
                    "no exact solution: the Hamiltonian couples classical and quantum variables".into(),
                )
            })?;
            Some((hc, hq, init.clone()))
        } else {
            None
        };
        Ok(NqcleSim {
            p: density_from_wavefunction(&init.sample(grid)?),
            h: NodeHamiltonian::new(&h.on_grid(grid)?),
            opts: NqcleOptions {
                eps_rho: cfg.solver.eps_rho,
                scheme: cfg.solver.transport,
                step: cfg.solver.step_options(),
            },
            exact,
            source: source_name(cfg, oracle),
        })
    }

    fn exact_at(&self, t: f64) -> Result<HybridDensityField> {
        let (hc, hq, init) = self.exact.as_ref().expect("exact driver");
        let grid = self.p.grid().clone();
        let n = self.p.dim();
        let chi0 = init.profile.evaluator(grid.hbar())?;
        let rho = liouville_advect(&grid, |q, p| chi0(q, p).norm_sqr(), &HamiltonianFunction::from(*hc), t)?;
        let s = init.spinor()?;
        let u = unitary(n, hq, t, grid.hbar());
        let st: Vec<Complex64> = (0..n).map(|j| (0..n).map(|k| u[j * n + k] * s[k]).sum()).collect();
        let mut m = MatrixField::zeros(grid.clone(), n);
        for (k, r) in rho.data().iter().enumerate() {
            for (a, b) in (0..n).flat_map(|a| (0..n).map(move |b| (a, b))) {
                m.node_mut(k)[a * n + b] = st[a] * st[b].conj() * *r;
            }
        }
        HybridDensityField::new(m)
    }
}

impl Simulation for NqcleSim {
    fn advance(&mut self, t0: f64, dt: f64, steps: usize) -> std::result::Result<(), (Error, f64)> {
        if self.exact.is_some() {
            let t = t0 + steps as f64 * dt;
            self.p = self.exact_at(t).map_err(|e| (e, t0))?;
            return Ok(());
        }
        let correction = NonlinearCorrection::Zero;
        let (p, h, opts) = (&mut self.p, &self.h, &self.opts);
        stepped(t0, dt, steps, || {
            let (next, diag) = nqcle_step(p, h, &correction, dt, opts)?;
            if diag.flagged_nodes > 0 {
                log::trace!("{} nodes below the density floor", diag.flagged_nodes);
            }
            *p = next;
            Ok(())
        })
    }

    fn observe(&self, t: f64, tol: &Tolerances) -> Result<ObservableRow> {
        let mut row = ObservableRow::new(t, self.source);
        row.set_quantum(&self.p.quantum_density());
        let n = self.p.dim();
        let g = self.p.grid();
        let (mut e, mut s) = (0.0, 0.0);
        for k in 0..g.len() {
            let (hk, pk) = (self.h.value.node(k), self.p.field().node(k));
            let tr: f64 = (0..n)
                .map(|a| (0..n).map(|b| (hk[a * n + b] * pk[b * n + a]).re).sum::<f64>())
                .sum();
            e += tr;
            s += tr.abs();
        }
        row.energy = e * g.cell_area();
        row.energy_scale = s * g.cell_area();
        row.total_norm = self.p.mass();
        row.set_density(&self.p.classical_density().density, tol.boundary_margin)?;
        Ok(row)
    }

    fn checkpoint(&self, dir: &Path, k: usize) -> Result<Vec<String>> {
        Ok(vec![
            save(dir, format!("P_{k:04}.kwph"), Snapshot::from_matrix(self.p.field())?)?,
            save(dir, format!("rho_c_{k:04}.kwph"), Snapshot::from_real(&self.p.classical_density().density))?,
        ])
    }
}

// ----- mean-field trajectory -----

struct EhrenfestSim {
    s: EhrenfestState,
    h: HybridHamiltonian,
    hbar: f64,
    trajectory: Vec<TrajectoryRow>,
}

impl EhrenfestSim {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let h = cfg.hybrid_hamiltonian()?;
        let s = EhrenfestState::new(cfg.initial.q0, cfg.initial.p0, cfg.spinor()?)?;
        let mut sim = EhrenfestSim {
            s,
            h,
            hbar: cfg.hbar(),
            trajectory: Vec::new(),
        };
        sim.record(0.0)?;
        Ok(sim)
    }

    fn record(&mut self, t: f64) -> Result<()> {
        let b = bloch_and_purity(&self.s.density()).ok().map(|b| b.n);
        self.trajectory.push(TrajectoryRow {
            t,
            q: self.s.q,
            p: self.s.p,
            n_x: b.map(|n| n[0]),
            n_y: b.map(|n| n[1]),
            n_z: b.map(|n| n[2]),
            energy: ehrenfest_energy(&self.s, &self.h)?,
        });
        Ok(())
    }
}

impl Simulation for EhrenfestSim {
    fn advance(&mut self, t0: f64, dt: f64, steps: usize) -> std::result::Result<(), (Error, f64)> {
        for i in 0..steps {
            let t = t0 + i as f64 * dt;
            self.s = ehrenfest_step(&self.s, &self.h, dt, self.hbar).map_err(|e| (e, t))?;
            self.record(t0 + (i + 1) as f64 * dt).map_err(|e| (e, t))?;
        }
        Ok(())
    }

    fn observe(&self, t: f64, _tol: &Tolerances) -> Result<ObservableRow> {
        let mut row = ObservableRow::new(t, "ehrenfest");
        row.set_quantum(&self.s.density());
        row.energy = ehrenfest_energy(&self.s, &self.h)?;
        let n = self.h.dim();
        let psi = &self.s.psi;
        row.energy_scale = self
            .h
            .terms()
            .iter()
            .map(|term| {
                let f = term.function.as_quadratic().map_or(0.0, |f| f.eval(self.s.q, self.s.p));
                let quad: Complex64 = (0..n)
                    .flat_map(|j| (0..n).map(move |k| (j, k)))
                    .map(|(j, k)| psi[j].conj() * term.matrix[j * n + k] * psi[k])
                    .sum();
                f.abs() * quad.norm()
            })
            .sum();
        row.total_norm = self.s.norm().powi(2);
        Ok(row)
    }

    fn checkpoint(&self, _dir: &Path, _k: usize) -> Result<Vec<String>> {
        Ok(Vec::new())
    }

    fn finish(&self, dir: &Path) -> Result<()> {
        write_rows(&dir.join(TRAJECTORY), &self.trajectory)
    }
}

// ----- truncated fully quantum reference -----

/// Serialized oscillator ⊗ n-level state at a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumStateRecord {
    pub t: f64,
    pub n_osc: usize,
    pub dim: usize,
    pub hbar: f64,
    /// `[re, im]` at index `m·dim + j`.
    pub amplitudes: Vec<[f64; 2]>,
}

impl QuantumStateRecord {
    pub fn from_state(s: &CompositeQuantumState, t: f64) -> Self {
        QuantumStateRecord {
            t,
            n_osc: s.n_osc,
            dim: s.dim,
            hbar: s.hbar,
            amplitudes: s.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn state(&self) -> Result<CompositeQuantumState> {
        let a = self.amplitudes.iter().map(|c| Complex64::new(c[0], c[1])).collect();
        CompositeQuantumState::new(self.n_osc, self.dim, a, self.hbar)
    }
}

struct QuantumSim {
    s0: CompositeQuantumState,
    s: CompositeQuantumState,
    prop: QuantumPropagator,
    grid: Arc<PhaseSpaceGrid>,
    tail_limit: f64,
    t: f64,
    /// Set once the grid proved too coarse for the Wigner transform.
    unresolved: std::cell::RefCell<Option<String>>,
}

impl QuantumSim {
    fn new(cfg: &ExperimentConfig, grid: &Arc<PhaseSpaceGrid>) -> Result<Self> {
        let h = cfg.hybrid_hamiltonian()?;
        let hbar = cfg.hbar();
        let n_osc = cfg.solver.n_osc;
        let s0 = CompositeQuantumState::ground_product(n_osc, &cfg.spinor()?, hbar)?;
        let prop = QuantumPropagator::new(&build_composite_hamiltonian(&h, n_osc, hbar)?, hbar)?;
        Ok(QuantumSim {
            s: s0.clone(),
            s0,
            prop,
            grid: grid.clone(),
            tail_limit: cfg.tolerances.truncation_tail,
            t: 0.0,
            unresolved: Default::default(),
        })
    }

    /// The spin-traced Wigner density, or `None` when the grid cannot resolve the
    /// populated levels; the Bloch and purity outputs do not depend on the grid.
    fn wigner(&self) -> Result<Option<RealField>> {
        match wigner_transform(&self.s.oscillator_density(), self.s.n_osc, &self.grid) {
            Ok(w) => Ok(Some(w.density)),
            Err(e @ Error::GridTooCoarse { .. }) => {
                let mut note = self.unresolved.borrow_mut();
                if note.is_none() {
                    log::warn!("skipping the Wigner density from t = {}: {e}", self.t);
                    *note = Some(format!("Wigner density omitted from t = {}: {e}", self.t));
                }
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

impl Simulation for QuantumSim {
    fn advance(&mut self, t0: f64, dt: f64, steps: usize) -> std::result::Result<(), (Error, f64)> {
        let t = t0 + steps as f64 * dt;
        self.s = self.prop.evolve_with_limit(&self.s0, t, self.tail_limit).map_err(|e| (e, t))?;
        self.t = t;
        Ok(())
    }

    fn observe(&self, t: f64, tol: &Tolerances) -> Result<ObservableRow> {
        let mut row = ObservableRow::new(t, "quantum");
        row.set_quantum(&spin_reduced_density(&self.s));
        row.energy = self.prop.energy(&self.s);
        row.energy_scale = self.prop.energy_scale(&self.s);
        row.total_norm = self.s.norm_sqr();
        if let Some(w) = self.wigner()? {
            row.set_density(&w, tol.boundary_margin)?;
        }
        Ok(row)
    }

    fn checkpoint(&self, dir: &Path, k: usize) -> Result<Vec<String>> {
        let state = format!("state_{k:04}.json");
        let json = serde_json::to_vec(&QuantumStateRecord::from_state(&self.s, self.t))
            .map_err(|e| Error::Format(e.to_string()))?;
        fs::write(dir.join(&state), json)?;
        let mut files = vec![state];
        if let Some(w) = self.wigner()? {
            files.push(save(dir, format!("rho_c_{k:04}.kwph"), Snapshot::from_real(&w))?);
        }
        Ok(files)
    }

    fn notes(&self) -> Vec<String> {
        self.unresolved.borrow().iter().cloned().collect()
    }
}

// ----- driver -----

pub(crate) fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        k => Error::Format(format!("{k:?}")),
    }
}

pub fn read_observables(dir: &Path) -> Result<Vec<ObservableRow>> {
    let mut r = csv::Reader::from_path(dir.join(OBSERVABLES)).map_err(csv_error)?;
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

/// Worst-case drifts over a run, compared against the configured tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monitors {
    pub norm_drift: f64,
    pub energy_drift: f64,
    pub mass_error: Option<f64>,
    pub min_rho_c: Option<f64>,
    pub min_eig: Option<f64>,
    pub within_tolerances: bool,
}

impl Monitors {
    pub fn from_rows(rows: &[ObservableRow], tol: &Tolerances) -> Option<Self> {
        let first = rows.first()?;
        let fold = |f: &dyn Fn(&ObservableRow) -> Option<f64>, pick: fn(f64, f64) -> f64| {
            rows.iter().filter_map(f).reduce(pick)
        };
        let scale = if first.energy_scale > 0.0 { first.energy_scale } else { 1.0 };
        let norm_drift = fold(&|r| Some((r.total_norm - first.total_norm).abs()), f64::max).unwrap_or(0.0);
        let energy_drift = fold(&|r| Some((r.energy - first.energy).abs() / scale), f64::max).unwrap_or(0.0);
        let mass_error = fold(&|r| r.rho_c_mass.map(|m| (m - 1.0).abs()), f64::max);
        let min_rho_c = fold(&|r| r.min_rho_c, f64::min);
        let min_eig = fold(&|r| r.min_eig, f64::min);
        let within_tolerances = norm_drift <= tol.norm_drift
            && energy_drift <= tol.energy_drift
            && mass_error.map_or(true, |m| m <= tol.mass)
            && min_rho_c.map_or(true, |m| m >= tol.min_rho_c)
            && min_eig.map_or(true, |m| m >= -tol.psd);
        Some(Monitors {
            norm_drift,
            energy_drift,
            mass_error,
            min_rho_c,
            min_eig,
            within_tolerances,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEntry {
    pub index: usize,
    pub t: f64,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub model: Model,
    pub source: String,
    pub status: String,
    pub wall_time_s: f64,
    pub config: ExperimentConfig,
    pub config_toml: String,
    pub checkpoints: Vec<CheckpointEntry>,
    pub monitors: Option<Monitors>,
    #[serde(default)]
    pub notes: Vec<String>,
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", MANIFEST)))
}

fn build(cfg: &ExperimentConfig, oracle: bool) -> Result<Box<dyn Simulation>> {
    let grid = cfg.grid.spec().build()?;
    Ok(match cfg.model {
        Model::Kvn | Model::Kvh => Box::new(KoopmanSim::new(cfg, &grid, oracle)?),
        Model::Qcwe => Box::new(QcweSim::new(cfg, &grid, oracle)?),
        Model::Nqcle => Box::new(NqcleSim::new(cfg, &grid, oracle)?),
        Model::Ehrenfest => Box::new(EhrenfestSim::new(cfg)?),
        Model::QuantumRef => Box::new(QuantumSim::new(cfg, &grid)?),
    })
}

/// Runs a validated config into `resolve_output(cfg.output)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> std::result::Result<RunOutcome, RunError> {
    run_into(cfg, &resolve_output(&cfg.output), false)
}

/// Runs the exact solution of the config into `<output>_oracle`. Mean-field and
/// fully quantum references are their own oracles.
pub fn run_oracle(cfg: &ExperimentConfig) -> std::result::Result<RunOutcome, RunError> {
    let dir = resolve_output(&format!("{}_oracle", cfg.output.trim_end_matches('/')));
    run_into(cfg, &dir, true)
}

pub fn run_into(cfg: &ExperimentConfig, dir: &Path, oracle: bool) -> std::result::Result<RunOutcome, RunError> {
    let violations = cfg.violations();
    if !violations.is_empty() {
        return Err(ConfigError { violations }.into());
    }
    let start = Instant::now();
    let ckdir = dir.join(CHECKPOINTS);
    fs::create_dir_all(&ckdir)?;
    let _ = fs::remove_file(dir.join(ERROR_RECORD));
    let source = source_name(cfg, oracle).to_string();

    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let times = cfg.checkpoint_times();
    let (_, every) = cfg.step_counts();
    let dt = cfg.time.dt;
    let tol = &cfg.tolerances;

    let result = (|| -> std::result::Result<Box<dyn Simulation>, (Error, f64)> {
        let mut sim = build(cfg, oracle).map_err(|e| match e {
            Error::InvalidArgument(_) | Error::NonQuadratic if oracle => (e, -1.0),
            e => (e, 0.0),
        })?;
        for (k, &t) in times.iter().enumerate() {
            if k > 0 {
                sim.advance(times[k - 1], dt, every)?;
            }
            let row = sim.observe(t, tol).map_err(|e| (e, t))?;
            if let Some(b) = row.boundary_mass {
                if b > tol.boundary_mass {
                    return Err((Error::BoundaryMass { mass: b, limit: tol.boundary_mass, t }, t));
                }
            }
            rows.push(row);
            let files = sim.checkpoint(&ckdir, k).map_err(|e| (e, t))?;
            entries.push(CheckpointEntry { index: k, t, files });
        }
        Ok(sim)
    })();

    let wall_time = start.elapsed().as_secs_f64();
    write_rows(&dir.join(OBSERVABLES), &rows).map_err(RunError::Io)?;
    let (status, notes) = match &result {
        Ok(sim) => {
            sim.finish(dir).map_err(RunError::Io)?;
            ("ok", sim.notes())
        }
        Err(_) => ("aborted", Vec::new()),
    };
    let manifest = Manifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        model: cfg.model,
        source,
        status: status.into(),
        wall_time_s: wall_time,
        config: cfg.clone(),
        config_toml: emit_config(cfg),
        checkpoints: entries,
        monitors: Monitors::from_rows(&rows, tol),
        notes,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| RunError::Io(Error::Format(e.to_string())))?;
    fs::write(dir.join(MANIFEST), json)?;

    match result {
        Ok(_) => Ok(RunOutcome {
            dir: dir.to_path_buf(),
            rows,
            wall_time,
        }),
        Err((error, t)) if t < 0.0 => Err(ConfigError {
            violations: vec![super::config::ConfigViolation::Invariant(error.to_string())],
        }
        .into()),
        Err((error, t)) => {
            let record = ErrorRecord {
                invariant: error.invariant().to_string(),
                message: error.to_string(),
                t,
                model: cfg.model.name().to_string(),
            };
            let json = serde_json::to_string_pretty(&record).expect("record serializes");
            fs::write(dir.join(ERROR_RECORD), json)?;
            match error {
                Error::Io(e) => Err(RunError::Io(Error::Io(e))),
                error => Err(RunError::Numerical {
                    error,
                    t,
                    dir: dir.to_path_buf(),
                }),
            }
        }
    }
}
