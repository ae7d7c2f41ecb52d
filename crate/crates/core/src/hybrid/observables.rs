use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::wavefunction::HybridWavefunction;
use crate::error::{Error, Result};
use crate::koopman::density::accumulate_momentum_map;
use crate::koopman::{ClassicalDensityField, DensityProvenance};
use crate::linalg;
use crate::phasespace::RealField;

/// Reduced quantum state `ρ̂_jk = ∫ Υ_j conj(Υ_k) dq dp`, normalized to unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumDensityMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
    /// Trace before normalization (the total norm of the source).
    pub raw_trace: f64,
}

impl QuantumDensityMatrix {
    /// Normalizes `data` by its trace.
    pub fn from_unnormalized(dim: usize, mut data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        let raw_trace: f64 = (0..dim).map(|j| data[j * dim + j].re).sum();
        if raw_trace > 0.0 {
            data.iter_mut().for_each(|z| *z /= raw_trace);
        }
        Ok(QuantumDensityMatrix {
            dim,
            data,
            raw_trace,
        })
    }

    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.data[j * self.dim + k]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|j| self.entry(j, j).re).sum()
    }

    pub fn hermitian_residual(&self) -> f64 {
        linalg::hermitian_residual(self.dim, &self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(self.dim, &self.data)
    }

    /// `Tr ρ̂²`.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

pub fn quantum_density(u: &HybridWavefunction) -> QuantumDensityMatrix {
    let n = u.dim();
    let mut m = vec![Complex64::default(); n * n];
    for j in 0..n {
        for k in j..n {
            // ∫ Υ_j conj(Υ_k) = conj(⟨Υ_j|Υ_k⟩)
            let v = u.component(j).inner(u.component(k)).expect("same grid").conj();
            m[j * n + k] = v;
            m[k * n + j] = v.conj();
        }
        m[j * n + j].im = 0.0;
    }
    QuantumDensityMatrix::from_unnormalized(n, m).expect("square by construction")
}

/// Sum over quantum levels of the Liouville density of each component.
pub fn hybrid_classical_density(u: &HybridWavefunction) -> ClassicalDensityField {
    let mut acc = vec![0.0; u.grid().len()];
    for c in u.components() {
        accumulate_momentum_map(c, &mut acc);
    }
    ClassicalDensityField {
        density: RealField::new(u.grid().clone(), acc).expect("finite density"),
        provenance: DensityProvenance::HybridMomentumMap,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochObservables {
    pub n: [f64; 3],
    pub purity: f64,
    pub energy: f64,
    pub time: f64,
}

impl BlochObservables {
    pub fn length(&self) -> f64 {
        self.n.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &BlochObservables) -> f64 {
        (0..3).map(|i| (self.n[i] - other.n[i]).powi(2)).sum::<f64>().sqrt()
    }
}

/// Bloch vector `n_i = Tr(ρ̂ σ_i)` and purity `Tr ρ̂²` of a two-level state.
pub fn bloch_and_purity(rho: &QuantumDensityMatrix) -> Result<BlochObservables> {
    if rho.dim != 2 {
        return Err(Error::NotTwoLevel(rho.dim));
    }
    let r01 = rho.entry(0, 1);
    let n = [
        2.0 * r01.re,
        -2.0 * r01.im,
        rho.entry(0, 0).re - rho.entry(1, 1).re,
    ];
    Ok(BlochObservables {
        n,
        purity: rho.purity(),
        energy: 0.0,
        time: 0.0,
    })
}
