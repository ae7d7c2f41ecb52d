use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phasespace::grid::same_grid;
use crate::phasespace::{ComplexField, PhaseSpaceGrid};
use crate::timestep::LinearState;

/// `Υ(q, p) ∈ ℂⁿ`, one complex field per quantum level.
#[derive(Clone, Debug)]
pub struct HybridWavefunction {
    components: Vec<ComplexField>,
}

impl HybridWavefunction {
    pub fn new(components: Vec<ComplexField>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("hybrid wavefunction needs a component".into()))?;
        for c in &components[1..] {
            same_grid(first.grid(), c.grid())?;
        }
        Ok(HybridWavefunction { components })
    }

    /// Samples `f(q, p) -> ℂⁿ` on the grid.
    pub fn from_fn(
        grid: &Arc<PhaseSpaceGrid>,
        dim: usize,
        f: impl Fn(f64, f64) -> Vec<Complex64>,
    ) -> Result<Self> {
        let mut data = vec![Vec::with_capacity(grid.len()); dim];
        for (q, p) in grid.nodes() {
            let v = f(q, p);
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            for (d, x) in data.iter_mut().zip(v) {
                d.push(x);
            }
        }
        let components = data
            .into_iter()
            .map(|d| ComplexField::new(grid.clone(), d))
            .collect::<Result<Vec<_>>>()?;
        Ok(HybridWavefunction { components })
    }

    /// `χ(q, p) · spinor`.
    pub fn product(chi: &ComplexField, spinor: &[Complex64]) -> Self {
        HybridWavefunction {
            components: spinor.iter().map(|&s| chi.scaled(s)).collect(),
        }
    }

    pub fn zeros(grid: &Arc<PhaseSpaceGrid>, dim: usize) -> Self {
        HybridWavefunction {
            components: (0..dim).map(|_| ComplexField::zeros(grid.clone())).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn grid(&self) -> &Arc<PhaseSpaceGrid> {
        self.components[0].grid()
    }

    pub fn components(&self) -> &[ComplexField] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &ComplexField {
        &self.components[j]
    }

    pub fn into_components(self) -> Vec<ComplexField> {
        self.components
    }

    /// `Σ_j ∫ |Υ_j|² dq dp`.
    pub fn total_norm(&self) -> f64 {
        self.components.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `Σ_j ⟨self_j | other_j⟩`.
    pub fn inner(&self, other: &HybridWavefunction) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    /// `√(Σ‖a_j − b_j‖²) / √(Σ‖b_j‖²)`.
    pub fn relative_l2_distance(&self, other: &HybridWavefunction) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            for (x, y) in a.data().iter().zip(b.data()) {
                num += (x - y).norm_sqr();
                den += y.norm_sqr();
            }
        }
        (num / den).sqrt()
    }

    pub fn max_abs_diff(&self, other: &HybridWavefunction) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Node weight `Σ_j |Υ_j|²`.
    pub fn node_density(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.grid().len()];
        for c in &self.components {
            for (a, z) in w.iter_mut().zip(c.data()) {
                *a += z.norm_sqr();
            }
        }
        w
    }

    /// Applies a constant `n × n` matrix at every node.
    pub fn rotate(&self, u: &[Complex64]) -> HybridWavefunction {
        let n = self.dim();
        let len = self.grid().len();
        let mut out = vec![vec![Complex64::default(); len]; n];
        for (j, o) in out.iter_mut().enumerate() {
            for k in 0..n {
                let m = u[j * n + k];
                if m == Complex64::default() {
                    continue;
                }
                for (x, y) in o.iter_mut().zip(self.components[k].data()) {
                    *x += m * y;
                }
            }
        }
        HybridWavefunction {
            components: out
                .into_iter()
                .map(|d| ComplexField::from_vec(self.grid().clone(), d))
                .collect(),
        }
    }
}

impl LinearState for HybridWavefunction {
    fn add_scaled(&self, other: &Self, a: f64) -> Self {
        HybridWavefunction {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(x, y)| x.add_scaled(y, a))
                .collect(),
        }
    }
}
