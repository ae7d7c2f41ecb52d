use std::sync::Arc;

use num_complex::Complex64;

use super::grid::{same_grid, PhaseSpaceGrid};
use crate::error::{Error, Result};

/// Complex scalar field on the phase-space grid (row-major, `q` outer).
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Arc<PhaseSpaceGrid>,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Arc<PhaseSpaceGrid>, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: data.len(),
            });
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("complex field"));
        }
        Ok(ComplexField { grid, data })
    }

    /// Internal constructor for data produced by trusted arithmetic.
    pub(crate) fn from_vec(grid: Arc<PhaseSpaceGrid>, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        ComplexField { grid, data }
    }

    pub fn zeros(grid: Arc<PhaseSpaceGrid>) -> Self {
        let n = grid.len();
        ComplexField {
            grid,
            data: vec![Complex64::default(); n],
        }
    }

    pub fn from_fn(grid: Arc<PhaseSpaceGrid>, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let data = grid.nodes().map(|(q, p)| f(q, p)).collect();
        ComplexField { grid, data }
    }

    pub fn grid(&self) -> &Arc<PhaseSpaceGrid> {
        &self.grid
    }
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn check_same_grid(&self, other: &ComplexField) -> Result<()> {
        same_grid(&self.grid, &other.grid)
    }

    /// `∫ |f|^2 dq dp`.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// `<self|other> = ∫ conj(self) other dq dp`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let s: Complex64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell_area())
    }

    pub fn scaled(&self, s: Complex64) -> ComplexField {
        ComplexField::from_vec(self.grid.clone(), self.data.iter().map(|z| z * s).collect())
    }

    /// `self + a * other` (grids assumed equal).
    pub fn add_scaled(&self, other: &ComplexField, a: f64) -> ComplexField {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| x + y * a)
            .collect();
        ComplexField::from_vec(self.grid.clone(), data)
    }

    pub fn modulus_sqr(&self) -> RealField {
        RealField::from_vec(
            self.grid.clone(),
            self.data.iter().map(|z| z.norm_sqr()).collect(),
        )
    }

    pub fn real_part(&self) -> RealField {
        RealField::from_vec(self.grid.clone(), self.data.iter().map(|z| z.re).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-norm distance to another field on the same grid.
    pub fn max_abs_diff(&self, other: &ComplexField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `||self - other||_2 / ||other||_2`.
    pub fn relative_l2_distance(&self, other: &ComplexField) -> f64 {
        let num: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = other.data.iter().map(|z| z.norm_sqr()).sum();
        (num / den).sqrt()
    }
}

/// Real scalar field on the phase-space grid.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Arc<PhaseSpaceGrid>,
    data: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Arc<PhaseSpaceGrid>, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("real field"));
        }
        Ok(RealField { grid, data })
    }

    pub(crate) fn from_vec(grid: Arc<PhaseSpaceGrid>, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        RealField { grid, data }
    }

    pub fn from_fn(grid: Arc<PhaseSpaceGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = grid.nodes().map(|(q, p)| f(q, p)).collect();
        RealField { grid, data }
    }

    pub fn zeros(grid: Arc<PhaseSpaceGrid>) -> Self {
        let n = grid.len();
        RealField {
            grid,
            data: vec![0.0; n],
        }
    }

    pub fn grid(&self) -> &Arc<PhaseSpaceGrid> {
        &self.grid
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn integrate(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField::from_vec(
            self.grid.clone(),
            self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    /// `∫ |self - other| dq dp`.
    pub fn l1_distance(&self, other: &RealField) -> Result<f64> {
        same_grid(&self.grid, &other.grid)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.cell_area())
    }

    pub fn add(&self, other: &RealField) -> RealField {
        RealField::from_vec(
            self.grid.clone(),
            self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn scaled(&self, s: f64) -> RealField {
        RealField::from_vec(self.grid.clone(), self.data.iter().map(|x| x * s).collect())
    }
}

/// Field of `n x n` complex matrices, node-major with row-major matrices.
#[derive(Clone, Debug)]
pub struct MatrixField {
    grid: Arc<PhaseSpaceGrid>,
    dim: usize,
    data: Vec<Complex64>,
}

impl MatrixField {
    pub fn new(grid: Arc<PhaseSpaceGrid>, dim: usize, data: Vec<Complex64>) -> Result<Self> {
        let expected = grid.len() * dim * dim;
        if dim == 0 || data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("matrix field"));
        }
        Ok(MatrixField { grid, dim, data })
    }

    pub(crate) fn from_vec(grid: Arc<PhaseSpaceGrid>, dim: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), grid.len() * dim * dim);
        MatrixField { grid, dim, data }
    }

    pub fn zeros(grid: Arc<PhaseSpaceGrid>, dim: usize) -> Self {
        let n = grid.len() * dim * dim;
        MatrixField {
            grid,
            dim,
            data: vec![Complex64::default(); n],
        }
    }

    pub fn grid(&self) -> &Arc<PhaseSpaceGrid> {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Matrix at flat node index `k`.
    pub fn node(&self, k: usize) -> &[Complex64] {
        let s = self.dim * self.dim;
        &self.data[k * s..(k + 1) * s]
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [Complex64] {
        let s = self.dim * self.dim;
        &mut self.data[k * s..(k + 1) * s]
    }

    /// Entry `(j, l)` across all nodes.
    pub fn entry(&self, j: usize, l: usize) -> Vec<Complex64> {
        let s = self.dim * self.dim;
        let off = j * self.dim + l;
        self.data.iter().skip(off).step_by(s).copied().collect()
    }

    pub fn set_entry(&mut self, j: usize, l: usize, values: &[Complex64]) {
        let s = self.dim * self.dim;
        let off = j * self.dim + l;
        for (k, v) in values.iter().enumerate() {
            self.data[k * s + off] = *v;
        }
    }

    pub fn trace(&self) -> RealField {
        let n = self.dim;
        let data = (0..self.grid.len())
            .map(|k| {
                let m = self.node(k);
                (0..n).map(|j| m[j * n + j].re).sum()
            })
            .collect();
        RealField::from_vec(self.grid.clone(), data)
    }

    /// Largest `|A_jl - conj(A_lj)|` over all nodes.
    pub fn hermitian_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for k in 0..self.grid.len() {
            let m = self.node(k);
            for j in 0..n {
                for l in j..n {
                    worst = worst.max((m[j * n + l] - m[l * n + j].conj()).norm());
                }
            }
        }
        worst
    }

    /// Replaces each node by `(A + A^†)/2`; returns the residual before the fix.
    pub fn symmetrize(&mut self) -> f64 {
        let residual = self.hermitian_residual();
        let n = self.dim;
        for k in 0..self.grid.len() {
            let m = self.node_mut(k);
            for j in 0..n {
                m[j * n + j].im = 0.0;
                for l in j + 1..n {
                    let avg = (m[j * n + l] + m[l * n + j].conj()) * 0.5;
                    m[j * n + l] = avg;
                    m[l * n + j] = avg.conj();
                }
            }
        }
        residual
    }

    pub fn add_scaled(&self, other: &MatrixField, a: f64) -> MatrixField {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| x + y * a)
            .collect();
        MatrixField::from_vec(self.grid.clone(), self.dim, data)
    }

    /// `∫ A dq dp` as a row-major `n x n` matrix.
    pub fn integrate(&self) -> Vec<Complex64> {
        let s = self.dim * self.dim;
        let mut acc = vec![Complex64::default(); s];
        for k in 0..self.grid.len() {
            for (a, v) in acc.iter_mut().zip(self.node(k)) {
                *a += v;
            }
        }
        let w = self.grid.cell_area();
        acc.iter_mut().for_each(|a| *a *= w);
        acc
    }

    pub fn max_abs_diff(&self, other: &MatrixField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
