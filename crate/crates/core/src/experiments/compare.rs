//! Checkpoint-by-checkpoint comparison of two run directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::run::{read_manifest, read_observables, write_rows, Manifest, ObservableRow, QuantumStateRecord, CHECKPOINTS};
use crate::error::{Error, Result};
use crate::phasespace::{PhaseSpaceGrid, RealField, Snapshot};
use crate::reference::wigner_transform;

pub const REPORT: &str = "report.json";
pub const COMPARISON: &str = "comparison.csv";

/// Checkpoint times closer than this are considered equal.
const TIME_TOL: f64 = 1e-9;

/// Metrics at one aligned checkpoint. Empty fields are undefined for the pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMetrics {
    pub t: f64,
    /// `‖n_A − n_B‖`.
    pub bloch_deviation: Option<f64>,
    /// `∫ |ρ_A − ρ_B| dq dp` on the grid of A.
    pub density_l1: Option<f64>,
    /// `purity_B − purity_A`.
    pub purity_gap: Option<f64>,
    /// `|E(t) − E(0)| / energy_scale(0)` for each run.
    pub energy_drift_a: f64,
    pub energy_drift_b: f64,
    pub min_rho_c_a: Option<f64>,
    pub min_rho_c_b: Option<f64>,
    /// `‖ψ_A − ψ_B‖ / ‖ψ_B‖` (or the same for matrix densities) when both runs store
    /// states of the same kind on the same grid.
    pub state_l2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dir_a: PathBuf,
    pub dir_b: PathBuf,
    pub source_a: String,
    pub source_b: String,
    pub runtime_a_s: f64,
    pub runtime_b_s: f64,
    pub checkpoints: Vec<CheckpointMetrics>,
    pub max_bloch_deviation: Option<f64>,
    pub max_density_l1: Option<f64>,
    pub min_purity_gap: Option<f64>,
    pub max_state_l2: Option<f64>,
}

struct Run {
    dir: PathBuf,
    manifest: Manifest,
    rows: Vec<ObservableRow>,
    grid: Arc<PhaseSpaceGrid>,
}

impl Run {
    fn load(dir: &Path) -> Result<Self> {
        let manifest = read_manifest(dir)?;
        let rows = read_observables(dir)?;
        if rows.is_empty() {
            return Err(Error::Format(format!("{} has no observables", dir.display())));
        }
        let grid = manifest.config.grid.spec().build()?;
        Ok(Run {
            dir: dir.to_path_buf(),
            manifest,
            rows,
            grid,
        })
    }

    fn file(&self, k: usize, prefix: &str) -> Option<PathBuf> {
        let entry = self.manifest.checkpoints.iter().find(|e| e.index == k)?;
        let name = entry.files.iter().find(|f| f.starts_with(prefix))?;
        Some(self.dir.join(CHECKPOINTS).join(name))
    }

    fn is_quantum(&self) -> bool {
        self.manifest.source == "quantum"
    }

    /// Classical density at checkpoint `k`, on `grid` if possible.
    fn density_on(&self, k: usize, grid: &Arc<PhaseSpaceGrid>) -> Result<Option<RealField>> {
        if same_grid(&self.grid, grid) {
            let Some(path) = self.file(k, "rho_c_") else {
                return Ok(None);
            };
            let snap = Snapshot::load(path)?;
            let data = snap.values.iter().map(|z| z.re).collect();
            return Ok(Some(RealField::new(grid.clone(), data)?));
        }
        if !self.is_quantum() {
            return Ok(None);
        }
        // resample the fully quantum state through its Wigner transform
        let Some(path) = self.file(k, "state_") else {
            return Ok(None);
        };
        let record: QuantumStateRecord = serde_json::from_slice(&fs::read(path)?)
            .map_err(|e| Error::Format(e.to_string()))?;
        if (record.hbar - grid.hbar()).abs() > 1e-12 * grid.hbar() {
            return Err(Error::InvalidArgument("runs use different hbar".into()));
        }
        let s = record.state()?;
        Ok(Some(wigner_transform(&s.oscillator_density(), s.n_osc, grid)?.density))
    }

    /// The evolved state: wavefunction components or the matrix density.
    fn state(&self, k: usize) -> Result<Option<Snapshot>> {
        match self.file(k, "psi_").or_else(|| self.file(k, "P_")) {
            Some(p) => Ok(Some(Snapshot::load(p)?)),
            None => Ok(None),
        }
    }
}

fn same_grid(a: &PhaseSpaceGrid, b: &PhaseSpaceGrid) -> bool {
    let (x, y) = (a.spec(), b.spec());
    x.nq == y.nq
        && x.np == y.np
        && [x.q_min - y.q_min, x.q_max - y.q_max, x.p_min - y.p_min, x.p_max - y.p_max, x.hbar - y.hbar]
            .iter()
            .all(|d| d.abs() <= 1e-12)
}

fn drift(rows: &[ObservableRow], k: usize) -> f64 {
    let scale = if rows[0].energy_scale > 0.0 { rows[0].energy_scale } else { 1.0 };
    (rows[k].energy - rows[0].energy).abs() / scale
}

fn relative_l2(a: &Snapshot, b: &Snapshot) -> Option<f64> {
    if a.kind != b.kind || a.dim != b.dim || a.values.len() != b.values.len() {
        return None;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.values.iter().zip(&b.values) {
        num += (x - y).norm_sqr();
        den += y.norm_sqr();
    }
    Some(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

fn opt_diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(b? - a?)
}

/// Compares run B against run A and writes `report.json` and `comparison.csv` to `out`.
pub fn compare_runs(dir_a: &Path, dir_b: &Path, out: Option<&Path>) -> Result<ComparisonReport> {
    let a = Run::load(dir_a)?;
    let b = Run::load(dir_b)?;
    if a.rows.len() != b.rows.len()
        || a.rows.iter().zip(&b.rows).any(|(x, y)| (x.t - y.t).abs() > TIME_TOL)
    {
        let ta: Vec<f64> = a.rows.iter().map(|r| r.t).collect();
        let tb: Vec<f64> = b.rows.iter().map(|r| r.t).collect();
        return Err(Error::InvalidArgument(format!("misaligned checkpoints: {ta:?} vs {tb:?}")));
    }
    let mut checkpoints = Vec::with_capacity(a.rows.len());
    for (k, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
        let bloch_deviation = match (ra.bloch(), rb.bloch()) {
            (Some(x), Some(y)) => Some((0..3).map(|i| (x[i] - y[i]).powi(2)).sum::<f64>().sqrt()),
            _ => None,
        };
        let density_l1 = match (a.density_on(k, &a.grid)?, b.density_on(k, &a.grid)?) {
            (Some(x), Some(y)) => Some(x.l1_distance(&y)?),
            _ => None,
        };
        let state_l2 = if same_grid(&a.grid, &b.grid) {
            match (a.state(k)?, b.state(k)?) {
                (Some(x), Some(y)) => relative_l2(&x, &y),
                _ => None,
            }
        } else {
            None
        };
        checkpoints.push(CheckpointMetrics {
            t: ra.t,
            bloch_deviation,
            density_l1,
            purity_gap: opt_diff(ra.purity, rb.purity),
            energy_drift_a: drift(&a.rows, k),
            energy_drift_b: drift(&b.rows, k),
            min_rho_c_a: ra.min_rho_c,
            min_rho_c_b: rb.min_rho_c,
            state_l2,
        });
    }
    let fold = |f: fn(&CheckpointMetrics) -> Option<f64>, pick: fn(f64, f64) -> f64| {
        checkpoints.iter().filter_map(f).reduce(pick)
    };
    let report = ComparisonReport {
        dir_a: dir_a.to_path_buf(),
        dir_b: dir_b.to_path_buf(),
        source_a: a.manifest.source.clone(),
        source_b: b.manifest.source.clone(),
        runtime_a_s: a.manifest.wall_time_s,
        runtime_b_s: b.manifest.wall_time_s,
        max_bloch_deviation: fold(|m| m.bloch_deviation, f64::max),
        max_density_l1: fold(|m| m.density_l1, f64::max),
        min_purity_gap: fold(|m| m.purity_gap, f64::min),
        max_state_l2: fold(|m| m.state_l2, f64::max),
        checkpoints,
    };
    let nonfinite = report.checkpoints.iter().any(|m| {
        [m.bloch_deviation, m.density_l1, m.purity_gap, m.state_l2, Some(m.energy_drift_a), Some(m.energy_drift_b)]
            .iter()
            .flatten()
            .any(|x| !x.is_finite())
    });
    if nonfinite {
        return Err(Error::NonFinite("comparison metrics"));
    }
    let out = match out {
        Some(o) => o.to_path_buf(),
        None => {
            let name = dir_b.file_name().map_or("b".into(), |n| n.to_string_lossy().into_owned());
            dir_a.join(format!("compare_{name}"))
        }
    };
    fs::create_dir_all(&out)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(out.join(REPORT), json)?;
    write_rows(&out.join(COMPARISON), &report.checkpoints)?;
    Ok(report)
}

