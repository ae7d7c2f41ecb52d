use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::HybridDensityField;
use crate::error::{Error, Result};
use crate::hybrid::HybridFields;
use crate::koopman::cfl_limit;
use crate::phasespace::grid::same_grid;
use crate::phasespace::MatrixField;
use crate::timestep::{rk4_step, StepOptions};

/// Relative floor on `ρ_c` below which the mean velocity is set to zero.
pub const DEFAULT_EPS_RHO_FACTOR: f64 = 1e-12;

/// Node matrices `Ĥ`, `∂_q Ĥ`, `∂_p Ĥ` of an effective hybrid Hamiltonian.
#[derive(Clone, Debug)]
pub struct NodeHamiltonian {
    pub value: MatrixField,
    pub d_q: MatrixField,
    pub d_p: MatrixField,
    speed: f64,
}

impl NodeHamiltonian {
    pub fn new(h: &HybridFields) -> Self {
        let grid = &h.grid;
        let n = h.dim;
        let mut value = MatrixField::zeros(grid.clone(), n);
        let mut d_q = MatrixField::zeros(grid.clone(), n);
        let mut d_p = MatrixField::zeros(grid.clone(), n);
        for (f, m) in &h.terms {
            for k in 0..grid.len() {
                for (dst, src) in [(&mut value, &f.value), (&mut d_q, &f.d_q), (&mut d_p, &f.d_p)] {
                    let s = src[k];
                    for (x, a) in dst.node_mut(k).iter_mut().zip(m) {
                        *x += a * s;
                    }
                }
            }
        }
        Self::from_parts(value, d_q, d_p)
    }

    fn from_parts(value: MatrixField, d_q: MatrixField, d_p: MatrixField) -> Self {
        let s = value.dim() * value.dim();
        let fro = |m: &[Complex64]| m.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let speed = d_q
            .data()
            .chunks_exact(s)
            .zip(d_p.data().chunks_exact(s))
            .map(|(a, b)| (fro(a) + fro(b)).sqrt())
            .fold(0.0, f64::max);
        NodeHamiltonian {
            value,
            d_q,
            d_p,
            speed,
        }
    }

    /// Upper bound on `|⟨X_Ĥ⟩|` for positive semidefinite `P̂`.
    pub fn max_speed(&self) -> f64 {
        self.speed
    }

    /// `Ĥ + extra`, with the derivatives of `extra` taken on the grid.
    fn plus(&self, extra: &MatrixField) -> Result<Self> {
        same_grid(self.value.grid(), extra.grid())?;
        if extra.dim() != self.value.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.value.dim(),
                found: extra.dim(),
            });
        }
        let (eq, ep) = entry_derivatives(extra);
        Ok(Self::from_parts(
            self.value.add_scaled(extra, 1.0),
            self.d_q.add_scaled(&eq, 1.0),
            self.d_p.add_scaled(&ep, 1.0),
        ))
    }
}

/// Entry-wise `∂_q`, `∂_p` of a matrix field.
fn entry_derivatives(m: &MatrixField) -> (MatrixField, MatrixField) {
    let grid = m.grid();
    let n = m.dim();
    let mut dq = MatrixField::zeros(grid.clone(), n);
    let mut dp = MatrixField::zeros(grid.clone(), n);
    for j in 0..n {
        for l in 0..n {
            let e = m.entry(j, l);
            dq.set_entry(j, l, &grid.derivative_q(&e));
            dp.set_entry(j, l, &grid.derivative_p(&e));
        }
    }
    (dq, dp)
}

type CorrectionFn = dyn Fn(&MatrixField, &MatrixField) -> Result<MatrixField> + Send + Sync;

/// The correction `F̂(P̂, {P̂, Ĥ})` entering the effective Hamiltonian `Ĥ + ħF̂`.
#[derive(Clone, Default)]
pub enum NonlinearCorrection {
    #[default]
    Zero,
    /// Receives `P̂` and the Hermitian bracket `({P̂, Ĥ} − {Ĥ, P̂})/2`; must
    /// return a Hermitian field of the same dimension.
    Custom(Arc<CorrectionFn>),
}

impl fmt::Debug for NonlinearCorrection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonlinearCorrection::Zero => f.write_str("Zero"),
            NonlinearCorrection::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl NonlinearCorrection {
    pub fn custom(
        f: impl Fn(&MatrixField, &MatrixField) -> Result<MatrixField> + Send + Sync + 'static,
    ) -> Self {
        NonlinearCorrection::Custom(Arc::new(f))
    }

    /// `Ĥ + ħF̂` at the current state.
    fn effective(&self, p: &MatrixField, h: &NodeHamiltonian) -> Result<Option<NodeHamiltonian>> {
        let NonlinearCorrection::Custom(f) = self else {
            return Ok(None);
        };
        let out = f(p, &matrix_bracket(p, h))?;
        let r = out.hermitian_residual();
        if r > 1e-10 * out.data().iter().map(|z| z.norm()).fold(1.0, f64::max) {
            return Err(Error::NonHermitian(r));
        }
        let hbar = p.grid().hbar();
        let scaled = MatrixField::zeros(p.grid().clone(), p.dim()).add_scaled(&out, hbar);
        h.plus(&scaled).map(Some)
    }
}

fn matmul_acc(n: usize, a: &[Complex64], b: &[Complex64], s: f64, out: &mut [Complex64]) {
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::default();
            for k in 0..n {
                acc += a[i * n + k] * b[k * n + j];
            }
            out[i * n + j] += acc * s;
        }
    }
}

fn trace_product(n: usize, a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut t = 0.0;
    for j in 0..n {
        for l in 0..n {
            t += (a[j * n + l] * b[l * n + j]).re;
        }
    }
    t
}

/// `({P̂, Ĥ} − {Ĥ, P̂})/2` with matrix products in the canonical bracket.
pub fn matrix_bracket(p: &MatrixField, h: &NodeHamiltonian) -> MatrixField {
    let n = p.dim();
    let (pq, pp) = entry_derivatives(p);
    let mut out = MatrixField::zeros(p.grid().clone(), n);
    for k in 0..p.grid().len() {
        let (a_q, a_p) = (pq.node(k), pp.node(k));
        let (h_q, h_p) = (h.d_q.node(k), h.d_p.node(k));
        let o = out.node_mut(k);
        matmul_acc(n, a_q, h_p, 0.5, o);
        matmul_acc(n, a_p, h_q, -0.5, o);
        matmul_acc(n, h_q, a_p, -0.5, o);
        matmul_acc(n, h_p, a_q, 0.5, o);
    }
    out
}

/// `⟨X_Ĥ⟩ = (Tr(∂_p Ĥ P̂), −Tr(∂_q Ĥ P̂)) / ρ_c`, zero where `ρ_c < eps_rho`.
#[derive(Clone, Debug)]
pub struct MeanVelocity {
    pub v_q: Vec<f64>,
    pub v_p: Vec<f64>,
    /// Nodes whose density fell below the floor.
    pub flagged: Vec<bool>,
}

impl MeanVelocity {
    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }
}

pub fn mean_velocity(p: &MatrixField, h: &NodeHamiltonian, eps_rho: f64) -> Result<MeanVelocity> {
    if !(eps_rho > 0.0) {
        return Err(Error::InvalidArgument(format!("eps_rho must be positive, got {eps_rho}")));
    }
    same_grid(p.grid(), h.value.grid())?;
    let n = p.dim();
    let len = p.grid().len();
    let mut v = MeanVelocity {
        v_q: vec![0.0; len],
        v_p: vec![0.0; len],
        flagged: vec![false; len],
    };
    for k in 0..len {
        let m = p.node(k);
        let rho: f64 = (0..n).map(|j| m[j * n + j].re).sum();
        if rho < eps_rho {
            v.flagged[k] = true;
            continue;
        }
        v.v_q[k] = trace_product(n, h.d_p.node(k), m) / rho;
        v.v_p[k] = -trace_product(n, h.d_q.node(k), m) / rho;
    }
    Ok(v)
}

/// How `div(P̂⟨X⟩)` is discretized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportScheme {
    /// Grid derivatives (spectral unless the grid says otherwise).
    #[default]
    Spectral,
    /// First-order donor-cell fluxes; diffusive, for cross-validation.
    Upwind,
}

fn divergence(p: &MatrixField, v: &MeanVelocity, scheme: TransportScheme) -> MatrixField {
    let grid = p.grid();
    let n = p.dim();
    let mut out = MatrixField::zeros(grid.clone(), n);
    for j in 0..n {
        for l in 0..n {
            let e = p.entry(j, l);
            let div: Vec<Complex64> = match scheme {
                TransportScheme::Spectral => {
                    let fq: Vec<Complex64> = e.iter().zip(&v.v_q).map(|(z, s)| z * s).collect();
                    let fp: Vec<Complex64> = e.iter().zip(&v.v_p).map(|(z, s)| z * s).collect();
                    grid.derivative_q(&fq)
                        .into_iter()
                        .zip(grid.derivative_p(&fp))
                        .map(|(a, b)| a + b)
                        .collect()
                }
                TransportScheme::Upwind => upwind_divergence(grid, &e, &v.v_q, &v.v_p),
            };
            out.set_entry(j, l, &div);
        }
    }
    out
}

fn upwind_divergence(
    grid: &crate::phasespace::PhaseSpaceGrid,
    e: &[Complex64],
    vq: &[f64],
    vp: &[f64],
) -> Vec<Complex64> {
    let (nq, np) = (grid.nq(), grid.np());
    let face = |a: usize, b: usize, v: &[f64]| {
        let s = 0.5 * (v[a] + v[b]);
        e[a] * s.max(0.0) + e[b] * s.min(0.0)
    };
    let mut out = vec![Complex64::default(); nq * np];
    for i in 0..nq {
        let (im, ip) = ((i + nq - 1) % nq, (i + 1) % nq);
        for j in 0..np {
            let (jm, jp) = ((j + np - 1) % np, (j + 1) % np);
            let k = grid.index(i, j);
            let fq = face(k, grid.index(ip, j), vq) - face(grid.index(im, j), k, vq);
            let fp = face(k, grid.index(i, jp), vp) - face(grid.index(i, jm), k, vp);
            out[k] = fq / grid.dq() + fp / grid.dp();
        }
    }
    out
}

/// `∂_t P̂ = −div(P̂⟨X_Ĥ⟩) − (i/ħ)[Ĥ, P̂]` with `Ĥ ← Ĥ + ħF̂`.
pub fn nqcle_rhs(
    p: &MatrixField,
    h: &NodeHamiltonian,
    correction: &NonlinearCorrection,
    eps_rho: f64,
    scheme: TransportScheme,
) -> Result<MatrixField> {
    same_grid(p.grid(), h.value.grid())?;
    if p.dim() != h.value.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.value.dim(),
            found: p.dim(),
        });
    }
    let scale = p.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let r = p.hermitian_residual();
    if r > 1e-8 * scale.max(1.0) {
        return Err(Error::NonHermitian(r));
    }
    let corrected = correction.effective(p, h)?;
    let h = corrected.as_ref().unwrap_or(h);
    let v = mean_velocity(p, h, eps_rho)?;
    let mut out = divergence(p, &v, scheme);
    let n = p.dim();
    let inv_hbar = 1.0 / p.grid().hbar();
    let mut comm = vec![Complex64::default(); n * n];
    for k in 0..p.grid().len() {
        comm.iter_mut().for_each(|z| *z = Complex64::default());
        matmul_acc(n, h.value.node(k), p.node(k), 1.0, &mut comm);
        matmul_acc(n, p.node(k), h.value.node(k), -1.0, &mut comm);
        for (o, c) in out.node_mut(k).iter_mut().zip(&comm) {
            // −div − (i/ħ)[Ĥ, P̂]
            *o = -*o - Complex64::new(0.0, inv_hbar) * c;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NqcleOptions {
    /// Absolute density floor; `None` uses `1e-12 · max ρ_c` of the step's input.
    pub eps_rho: Option<f64>,
    pub scheme: TransportScheme,
    pub step: StepOptions,
}

impl Default for NqcleOptions {
    fn default() -> Self {
        NqcleOptions {
            eps_rho: None,
            scheme: TransportScheme::Spectral,
            step: StepOptions::default(),
        }
    }
}

/// Per-step bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NqcleDiagnostics {
    /// Hermitian residual removed by re-symmetrization.
    pub hermitian_drift: f64,
    pub eps_rho: f64,
    pub flagged_nodes: usize,
}

pub fn resolve_eps_rho(p: &HybridDensityField, eps_rho: Option<f64>) -> f64 {
    eps_rho.unwrap_or_else(|| {
        let max = p.classical_density().density.max();
        (DEFAULT_EPS_RHO_FACTOR * max).max(f64::MIN_POSITIVE)
    })
}

/// One RK4 step followed by `P̂ ← (P̂ + P̂†)/2`.
pub fn nqcle_step(
    p: &HybridDensityField,
    h: &NodeHamiltonian,
    correction: &NonlinearCorrection,
    dt: f64,
    opts: &NqcleOptions,
) -> Result<(HybridDensityField, NqcleDiagnostics)> {
    opts.step.check(dt, cfl_limit(p.grid(), h.max_speed(), opts.step.cfl))?;
    let eps = resolve_eps_rho(p, opts.eps_rho);
    let flagged_nodes = mean_velocity(p.field(), h, eps)?.flagged_count();
    let mut next = rk4_step(p.field(), dt, |y| nqcle_rhs(y, h, correction, eps, opts.scheme))?;
    let hermitian_drift = next.symmetrize();
    if hermitian_drift > 0.0 {
        log::debug!("nqcle step re-symmetrized, drift {hermitian_drift:e}");
    }
    Ok((
        HybridDensityField::from_field_unchecked(next),
        NqcleDiagnostics {
            hermitian_drift,
            eps_rho: eps,
            flagged_nodes,
        },
    ))
}
