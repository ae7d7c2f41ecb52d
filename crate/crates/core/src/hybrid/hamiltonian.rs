use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::koopman::{HamiltonianFields, HamiltonianFunction, QuadraticForm};
use crate::linalg;
use crate::phasespace::PhaseSpaceGrid;

const HERMITIAN_TOL: f64 = 1e-12;

pub fn pauli_x() -> Vec<Complex64> {
    vec![0.0.into(), 1.0.into(), 1.0.into(), 0.0.into()]
}

pub fn pauli_y() -> Vec<Complex64> {
    vec![
        0.0.into(),
        Complex64::new(0.0, -1.0),
        Complex64::new(0.0, 1.0),
        0.0.into(),
    ]
}

pub fn pauli_z() -> Vec<Complex64> {
    vec![1.0.into(), 0.0.into(), 0.0.into(), (-1.0).into()]
}

/// `f(q, p) · M` with `f` real and `M` a constant Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HamiltonianTerm {
    pub function: HamiltonianFunction,
    pub matrix: Vec<Complex64>,
}

/// `Ĥ = H0 𝟙 + H_I Σ` with `Σ = U Λ U†` precomputed.
#[derive(Clone, Debug)]
pub struct DiagonalFamily {
    pub h0: HamiltonianFunction,
    pub h_i: HamiltonianFunction,
    pub sigma: Vec<Complex64>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Complex64>,
}

impl DiagonalFamily {
    /// `H0 + λ_j H_I` for each eigenvalue of `Σ`, when both parts are quadratic.
    pub fn channel_hamiltonians(&self) -> Result<Vec<QuadraticForm>> {
        let h0 = self.h0.as_quadratic().ok_or(Error::NonQuadratic)?;
        let hi = self.h_i.as_quadratic().ok_or(Error::NonQuadratic)?;
        Ok(self
            .eigenvalues
            .iter()
            .map(|&l| h0.add(&hi.scale(l)))
            .collect())
    }
}

/// A Hermitian matrix of phase-space functions, stored as a sum of terms.
#[derive(Clone, Debug)]
pub struct HybridHamiltonian {
    dim: usize,
    terms: Vec<HamiltonianTerm>,
    diagonal: Option<DiagonalFamily>,
}

impl HybridHamiltonian {
    pub fn new(dim: usize, terms: Vec<HamiltonianTerm>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("quantum dimension must be positive".into()));
        }
        for t in &terms {
            check_hermitian(dim, &t.matrix)?;
        }
        Ok(HybridHamiltonian {
            dim,
            terms,
            diagonal: None,
        })
    }

    /// `H 𝟙` for a one-level (purely classical) sector.
    pub fn scalar(h: HamiltonianFunction) -> Self {
        HybridHamiltonian {
            dim: 1,
            terms: vec![HamiltonianTerm {
                function: h,
                matrix: vec![Complex64::new(1.0, 0.0)],
            }],
            diagonal: None,
        }
    }

    /// `H0 𝟙 + H_I Σ`, flagged for the exact channel solver.
    pub fn diagonal_family(
        h0: HamiltonianFunction,
        h_i: HamiltonianFunction,
        sigma: Vec<Complex64>,
    ) -> Result<Self> {
        let n = (sigma.len() as f64).sqrt() as usize;
        if n * n != sigma.len() || n == 0 {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: sigma.len(),
            });
        }
        check_hermitian(n, &sigma)?;
        let (eigenvalues, eigenvectors) = linalg::hermitian_eigen(n, &sigma);
        let mut lam = vec![Complex64::default(); n * n];
        for (i, &l) in eigenvalues.iter().enumerate() {
            lam[i * n + i] = l.into();
        }
        let back = linalg::matmul(
            n,
            &linalg::matmul(n, &eigenvectors, &lam),
            &linalg::adjoint(n, &eigenvectors),
        );
        let err = linalg::max_abs_diff(&back, &sigma);
        if err > HERMITIAN_TOL {
            return Err(Error::NonHermitian(err));
        }
        let terms = vec![
            HamiltonianTerm {
                function: h0.clone(),
                matrix: linalg::identity(n),
            },
            HamiltonianTerm {
                function: h_i.clone(),
                matrix: sigma.clone(),
            },
        ];
        Ok(HybridHamiltonian {
            dim: n,
            terms,
            diagonal: Some(DiagonalFamily {
                h0,
                h_i,
                sigma,
                eigenvalues,
                eigenvectors,
            }),
        })
    }

    /// The solvable spin-½ example: `H0 = (p² + q²)/2`, `H_I = (q² − p²)/4 + 1/2`, `Σ = σ_z`.
    pub fn figure1() -> Self {
        HybridHamiltonian::diagonal_family(
            QuadraticForm::oscillator().into(),
            figure1_coupling().into(),
            pauli_z(),
        )
        .expect("σ_z is Hermitian")
    }

    /// Adds a term; the exact-channel flag is dropped because the family changes.
    pub fn with_term(mut self, function: HamiltonianFunction, matrix: Vec<Complex64>) -> Result<Self> {
        if matrix.len() != self.dim * self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim * self.dim,
                found: matrix.len(),
            });
        }
        check_hermitian(self.dim, &matrix)?;
        self.terms.push(HamiltonianTerm { function, matrix });
        self.diagonal = None;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[HamiltonianTerm] {
        &self.terms
    }

    pub fn diagonal(&self) -> Option<&DiagonalFamily> {
        self.diagonal.as_ref()
    }

    pub fn is_quadratic(&self) -> bool {
        self.terms.iter().all(|t| t.function.as_quadratic().is_some())
    }

    /// `Ĥ(q, p)` as a row-major matrix; requires quadratic entries.
    pub fn matrix_at(&self, q: f64, p: f64) -> Result<Vec<Complex64>> {
        self.combine(|f| f.eval(q, p))
    }

    pub fn d_q_at(&self, q: f64, p: f64) -> Result<Vec<Complex64>> {
        self.combine(|f| f.d_q(q, p))
    }

    pub fn d_p_at(&self, q: f64, p: f64) -> Result<Vec<Complex64>> {
        self.combine(|f| f.d_p(q, p))
    }

    fn combine(&self, value: impl Fn(&QuadraticForm) -> f64) -> Result<Vec<Complex64>> {
        let n = self.dim;
        let mut out = vec![Complex64::default(); n * n];
        for t in &self.terms {
            let f = t.function.as_quadratic().ok_or(Error::NonQuadratic)?;
            let v = value(f);
            for (o, m) in out.iter_mut().zip(&t.matrix) {
                *o += m * v;
            }
        }
        Ok(out)
    }

    /// Quadratic entries `Ĥ_jk` as complex coefficient sets `(re, im)`.
    pub fn quadratic_entries(&self) -> Result<Vec<(QuadraticForm, QuadraticForm)>> {
        let n = self.dim;
        let mut out = vec![(QuadraticForm::default(), QuadraticForm::default()); n * n];
        for t in &self.terms {
            let f = t.function.as_quadratic().ok_or(Error::NonQuadratic)?;
            for (o, m) in out.iter_mut().zip(&t.matrix) {
                o.0 = o.0.add(&f.scale(m.re));
                o.1 = o.1.add(&f.scale(m.im));
            }
        }
        Ok(out)
    }

    pub fn on_grid(&self, grid: &Arc<PhaseSpaceGrid>) -> Result<HybridFields> {
        let terms = self
            .terms
            .iter()
            .filter(|t| !t.function.is_zero() && t.matrix.iter().any(|m| m.norm() > 0.0))
            .map(|t| Ok((t.function.on_grid(grid)?, t.matrix.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(HybridFields {
            grid: grid.clone(),
            dim: self.dim,
            terms,
        })
    }
}

/// `(q² − p²)/4 + 1/2`.
pub fn figure1_coupling() -> QuadraticForm {
    QuadraticForm::new(0.25, -0.25, 0.0, 0.0, 0.0, 0.5)
}

fn check_hermitian(n: usize, m: &[Complex64]) -> Result<()> {
    if m.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: m.len(),
        });
    }
    let r = linalg::hermitian_residual(n, m);
    if r > HERMITIAN_TOL {
        return Err(Error::NonHermitian(r));
    }
    Ok(())
}

/// Node data for each term of a hybrid Hamiltonian.
#[derive(Clone, Debug)]
pub struct HybridFields {
    pub grid: Arc<PhaseSpaceGrid>,
    pub dim: usize,
    pub terms: Vec<(HamiltonianFields, Vec<Complex64>)>,
}

impl HybridFields {
    /// Bound on the largest entry-wise Hamiltonian speed.
    pub fn max_speed(&self) -> f64 {
        self.terms
            .iter()
            .map(|(f, m)| f.max_speed() * m.iter().map(|z| z.norm()).fold(0.0, f64::max))
            .sum()
    }
}
