use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hybrid::{HybridWavefunction, QuantumDensityMatrix};
use crate::koopman::{ClassicalDensityField, DensityProvenance};
use crate::linalg;
use crate::phasespace::{MatrixField, PhaseSpaceGrid};

/// Default positivity slack at initialization.
pub const TOL_PSD: f64 = 1e-8;
const HERMITIAN_TOL: f64 = 1e-12;

/// Hermitian-matrix-valued phase-space density `P̂(q, p)` whose trace is the
/// classical density.
#[derive(Clone, Debug)]
pub struct HybridDensityField {
    field: MatrixField,
}

impl HybridDensityField {
    /// Wraps a matrix field after checking Hermiticity node by node.
    pub fn new(field: MatrixField) -> Result<Self> {
        let r = field.hermitian_residual();
        if r > HERMITIAN_TOL {
            return Err(Error::NonHermitian(r));
        }
        Ok(HybridDensityField { field })
    }

    pub(crate) fn from_field_unchecked(field: MatrixField) -> Self {
        HybridDensityField { field }
    }

    pub fn field(&self) -> &MatrixField {
        &self.field
    }

    pub fn into_field(self) -> MatrixField {
        self.field
    }

    pub fn grid(&self) -> &Arc<PhaseSpaceGrid> {
        self.field.grid()
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    /// `ρ_c = Tr P̂`.
    pub fn classical_density(&self) -> ClassicalDensityField {
        ClassicalDensityField {
            density: self.field.trace(),
            provenance: DensityProvenance::NonlinearTrace,
        }
    }

    /// `∫ Tr P̂ dq dp`.
    pub fn mass(&self) -> f64 {
        self.field.trace().integrate()
    }

    /// `∫ P̂ dq dp`, normalized to unit trace.
    pub fn quantum_density(&self) -> QuantumDensityMatrix {
        QuantumDensityMatrix::from_unnormalized(self.dim(), self.field.integrate())
            .expect("square by construction")
    }

    /// Smallest eigenvalue over all nodes.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.dim();
        (0..self.grid().len())
            .map(|k| linalg::min_eigenvalue(n, self.field.node(k)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn hermitian_residual(&self) -> f64 {
        self.field.hermitian_residual()
    }

    /// Checks unit mass (±1e-6) and pointwise `λ_min ≥ −tol_psd`.
    pub fn validate(&self, tol_psd: f64) -> Result<()> {
        let mass = self.mass();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "hybrid density must have unit mass, got {mass}"
            )));
        }
        let lo = self.min_eigenvalue();
        if lo < -tol_psd {
            return Err(Error::InvalidArgument(format!(
                "hybrid density has eigenvalue {lo:e} below −{tol_psd:e}"
            )));
        }
        Ok(())
    }
}

/// `P̂_jk = Υ_j conj(Υ_k)` at every node.
pub fn density_from_wavefunction(u: &HybridWavefunction) -> HybridDensityField {
    let n = u.dim();
    let grid = u.grid().clone();
    let mut data = vec![Complex64::default(); grid.len() * n * n];
    for (k, m) in data.chunks_exact_mut(n * n).enumerate() {
        for j in 0..n {
            let a = u.component(j).data()[k];
            for l in 0..n {
                m[j * n + l] = a * u.component(l).data()[k].conj();
            }
        }
    }
    HybridDensityField::from_field_unchecked(MatrixField::new(grid, n, data).expect("finite outer product"))
}
