use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hybrid::{HybridHamiltonian, QuantumDensityMatrix};
use crate::koopman::QuadraticForm;
use crate::linalg;

/// Tail levels monitored for truncation error.
pub const TAIL_LEVELS: usize = 4;
pub const TAIL_LIMIT: f64 = 1e-8;
const NORM_TOL: f64 = 1e-10;

/// Oscillator ⊗ n-level amplitudes `c[m, j]`, stored at index `m·n + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeQuantumState {
    pub n_osc: usize,
    pub dim: usize,
    pub amplitudes: Vec<Complex64>,
    pub hbar: f64,
}

impl CompositeQuantumState {
    pub fn new(n_osc: usize, dim: usize, amplitudes: Vec<Complex64>, hbar: f64) -> Result<Self> {
        if amplitudes.len() != n_osc * dim {
            return Err(Error::DimensionMismatch {
                expected: n_osc * dim,
                found: amplitudes.len(),
            });
        }
        let s = CompositeQuantumState {
            n_osc,
            dim,
            amplitudes,
            hbar,
        };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("composite state norm {norm} ≠ 1")));
        }
        Ok(s)
    }

    /// `|0⟩ ⊗ spinor` (spinor normalized here).
    pub fn ground_product(n_osc: usize, spinor: &[Complex64], hbar: f64) -> Result<Self> {
        let norm = spinor.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let dim = spinor.len();
        let mut a = vec![Complex64::default(); n_osc * dim];
        for (j, s) in spinor.iter().enumerate() {
            a[j] = s / norm;
        }
        Self::new(n_osc, dim, a, hbar)
    }

    pub fn amplitude(&self, m: usize, j: usize) -> Complex64 {
        self.amplitudes[m * self.dim + j]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Σ_{m ≥ N − 4} Σ_j |c[m, j]|²`.
    pub fn tail_mass(&self) -> f64 {
        let from = self.n_osc.saturating_sub(TAIL_LEVELS);
        self.amplitudes[from * self.dim..].iter().map(|z| z.norm_sqr()).sum()
    }

    /// Spin-traced oscillator density `ρ_mm' = Σ_j c[m, j] conj(c[m', j])`.
    pub fn oscillator_density(&self) -> Vec<Complex64> {
        let (no, n) = (self.n_osc, self.dim);
        let mut rho = vec![Complex64::default(); no * no];
        for m in 0..no {
            for mp in 0..no {
                rho[m * no + mp] = (0..n).map(|j| self.amplitude(m, j) * self.amplitude(mp, j).conj()).sum();
            }
        }
        rho
    }
}

/// `ρ̂_jk = Σ_m c[m, j] conj(c[m, k])`.
pub fn spin_reduced_density(s: &CompositeQuantumState) -> QuantumDensityMatrix {
    let n = s.dim;
    let mut rho = vec![Complex64::default(); n * n];
    for j in 0..n {
        for k in 0..n {
            rho[j * n + k] = (0..s.n_osc).map(|m| s.amplitude(m, j) * s.amplitude(m, k).conj()).sum();
        }
    }
    QuantumDensityMatrix::from_unnormalized(n, rho).expect("square by construction")
}

/// `x̂ = √(ħ/2)(a + a†)` and `p̂ = i√(ħ/2)(a† − a)` on `size` number states.
fn ladder_operators(size: usize, hbar: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let s = (hbar / 2.0).sqrt();
    let mut x = DMatrix::zeros(size, size);
    let mut p = DMatrix::zeros(size, size);
    for m in 1..size {
        let r = (m as f64).sqrt() * s;
        // ⟨m−1|a|m⟩ = √m
        x[(m - 1, m)] = Complex64::new(r, 0.0);
        x[(m, m - 1)] = Complex64::new(r, 0.0);
        p[(m, m - 1)] = Complex64::new(0.0, r);
        p[(m - 1, m)] = Complex64::new(0.0, -r);
    }
    (x, p)
}

/// Weyl-ordered quantization of a quadratic form, truncated to `n_osc` levels.
pub fn quantize_quadratic(f: &QuadraticForm, n_osc: usize, hbar: f64) -> DMatrix<Complex64> {
    // products are exact on the first n_osc levels when built two levels larger
    let big = n_osc + 2;
    let (x, p) = ladder_operators(big, hbar);
    let id = DMatrix::<Complex64>::identity(big, big);
    let c = |v: f64| Complex64::new(v, 0.0);
    let xp = &x * &p;
    let px = &p * &x;
    let full = &x * &x * c(f.qq)
        + &p * &p * c(f.pp)
        + (xp + px) * c(0.5 * f.qp)
        + &x * c(f.q)
        + &p * c(f.p)
        + id * c(f.c);
    full.view((0, 0), (n_osc, n_osc)).into_owned()
}

/// `Σ_terms f̂_t ⊗ M_t` in the basis `|m⟩ ⊗ |j⟩` (index `m·n + j`).
pub fn build_composite_hamiltonian(
    h: &HybridHamiltonian,
    n_osc: usize,
    hbar: f64,
) -> Result<DMatrix<Complex64>> {
    let n = h.dim();
    let size = n_osc * n;
    let mut out = DMatrix::<Complex64>::zeros(size, size);
    for t in h.terms() {
        let f = t.function.as_quadratic().ok_or(Error::NonQuadratic)?;
        let fq = quantize_quadratic(f, n_osc, hbar);
        for m in 0..n_osc {
            for mp in 0..n_osc {
                let a = fq[(m, mp)];
                if a == Complex64::default() {
                    continue;
                }
                for j in 0..n {
                    for k in 0..n {
                        out[(m * n + j, mp * n + k)] += a * t.matrix[j * n + k];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Exact propagator `exp(−iĤt/ħ)` from one eigendecomposition.
#[derive(Clone, Debug)]
pub struct QuantumPropagator {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
    hbar: f64,
}

impl QuantumPropagator {
    pub fn new(hmat: &DMatrix<Complex64>, hbar: f64) -> Result<Self> {
        let n = hmat.nrows();
        let flat = linalg::from_dmatrix(hmat);
        let r = linalg::hermitian_residual(n, &flat);
        if r > 1e-10 {
            return Err(Error::NonHermitian(r));
        }
        let (eigenvalues, u) = linalg::hermitian_eigen(n, &flat);
        Ok(QuantumPropagator {
            eigenvalues,
            eigenvectors: linalg::to_dmatrix(n, &u),
            hbar,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `c(t) = U e^{−iΛt/ħ} U† c(0)`; aborts when the truncation tail grows too large.
    pub fn evolve(&self, s: &CompositeQuantumState, t: f64) -> Result<CompositeQuantumState> {
        self.evolve_with_limit(s, t, TAIL_LIMIT)
    }

    pub fn evolve_with_limit(
        &self,
        s: &CompositeQuantumState,
        t: f64,
        tail_limit: f64,
    ) -> Result<CompositeQuantumState> {
        let c0 = nalgebra::DVector::from_column_slice(&s.amplitudes);
        if c0.len() != self.eigenvalues.len() {
            return Err(Error::DimensionMismatch {
                expected: self.eigenvalues.len(),
                found: c0.len(),
            });
        }
        let mut w = self.eigenvectors.adjoint() * c0;
        for (z, &e) in w.iter_mut().zip(&self.eigenvalues) {
            *z *= Complex64::from_polar(1.0, -e * t / self.hbar);
        }
        let out = CompositeQuantumState {
            amplitudes: (&self.eigenvectors * w).iter().copied().collect(),
            ..s.clone()
        };
        let tail = out.tail_mass();
        if tail > tail_limit {
            return Err(Error::TruncationTail {
                tail,
                limit: tail_limit,
                t,
            });
        }
        let norm = out.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("propagation lost unitarity: norm {norm}")));
        }
        Ok(out)
    }

    /// `⟨c|Ĥ|c⟩`.
    pub fn energy(&self, s: &CompositeQuantumState) -> f64 {
        let c = nalgebra::DVector::from_column_slice(&s.amplitudes);
        let w = self.eigenvectors.adjoint() * c;
        w.iter().zip(&self.eigenvalues).map(|(z, e)| z.norm_sqr() * e).sum()
    }

    /// `⟨c| |Ĥ| |c⟩`, a positive energy magnitude.
    pub fn energy_scale(&self, s: &CompositeQuantumState) -> f64 {
        let c = nalgebra::DVector::from_column_slice(&s.amplitudes);
        let w = self.eigenvectors.adjoint() * c;
        w.iter().zip(&self.eigenvalues).map(|(z, e)| z.norm_sqr() * e.abs()).sum()
    }
}

pub fn quantum_evolve(
    s: &CompositeQuantumState,
    hmat: &DMatrix<Complex64>,
    t: f64,
) -> Result<CompositeQuantumState> {
    QuantumPropagator::new(hmat, s.hbar)?.evolve(s, t)
}
