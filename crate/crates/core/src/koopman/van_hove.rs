//! The van Hove representation restricted to affine symplectic maps.
//!
//! A transform is a pair `(η, φ)` with `η(z) = M z + t`, `det M = 1`, and a phase
//! `φ` satisfying `η*θ + dφ = θ` for `θ = p dq`. For affine `η` the compatible
//! phase is quadratic and unique up to a constant. It acts by
//! `(g·χ)(z) = χ(η⁻¹ z) exp(−i φ(η⁻¹ z) / ħ)`.

use num_complex::Complex64;

use super::characteristics::Mat2;
use super::hamiltonian::QuadraticForm;
use crate::error::{Error, Result};
use crate::phasespace::{ComplexField, PhaseSpaceGrid};

const DET_TOL: f64 = 1e-12;
pub const COMPATIBILITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VanHoveTransform {
    pub m: Mat2,
    pub t: [f64; 2],
    pub phase: QuadraticForm,
}

impl VanHoveTransform {
    /// Validates `det M = 1`; the phase is checked on a grid when acting.
    pub fn new(m: Mat2, t: [f64; 2], phase: QuadraticForm) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::NotSymplectic(det));
        }
        Ok(VanHoveTransform { m, t, phase })
    }

    /// The affine map with its compatible phase, fixed by `φ(0) = c`.
    pub fn affine(m: Mat2, t: [f64; 2], c: f64) -> Result<Self> {
        let [[a, b], [cc, d]] = m;
        let t2 = t[1];
        let phase = QuadraticForm::new(
            -a * cc / 2.0,
            -b * d / 2.0,
            -b * cc,
            -a * t2,
            -b * t2,
            c,
        );
        VanHoveTransform::new(m, t, phase)
    }

    pub fn identity() -> Self {
        VanHoveTransform {
            m: [[1.0, 0.0], [0.0, 1.0]],
            t: [0.0, 0.0],
            phase: QuadraticForm::default(),
        }
    }

    pub fn translation(a: f64, b: f64) -> Self {
        VanHoveTransform::affine([[1.0, 0.0], [0.0, 1.0]], [a, b], 0.0).unwrap()
    }

    /// Clockwise rotation by `angle` about the origin.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        VanHoveTransform::affine([[c, s], [-s, c]], [0.0, 0.0], 0.0).unwrap()
    }

    pub fn eta(&self, z: [f64; 2]) -> [f64; 2] {
        let m = self.m;
        [
            m[0][0] * z[0] + m[0][1] * z[1] + self.t[0],
            m[1][0] * z[0] + m[1][1] * z[1] + self.t[1],
        ]
    }

    pub fn eta_inverse(&self, z: [f64; 2]) -> [f64; 2] {
        let m = self.m;
        let (x, y) = (z[0] - self.t[0], z[1] - self.t[1]);
        [m[1][1] * x - m[0][1] * y, -m[1][0] * x + m[0][0] * y]
    }

    /// Largest node residual of `η*θ + dφ − θ`, both `dq` and `dp` components.
    pub fn compatibility_residual(&self, grid: &PhaseSpaceGrid) -> f64 {
        let m = self.m;
        grid.nodes()
            .map(|(q, p)| {
                let big_p = m[1][0] * q + m[1][1] * p + self.t[1];
                let rq = big_p * m[0][0] + self.phase.d_q(q, p) - p;
                let rp = big_p * m[0][1] + self.phase.d_p(q, p);
                rq.abs().max(rp.abs())
            })
            .fold(0.0, f64::max)
    }

    /// `self ∘ first`: acting with the result equals acting with `first`, then `self`.
    pub fn compose(&self, first: &VanHoveTransform) -> VanHoveTransform {
        let (a, b) = (self.m, first.m);
        let mut m = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        let t = [
            a[0][0] * first.t[0] + a[0][1] * first.t[1] + self.t[0],
            a[1][0] * first.t[0] + a[1][1] * first.t[1] + self.t[1],
        ];
        VanHoveTransform {
            m,
            t,
            phase: first.phase.add(&self.phase.compose_affine(first.m, first.t)),
        }
    }
}

/// `f ∘ M⁻¹` on node data by a sequence of Fourier shears.
fn resample_linear(grid: &PhaseSpaceGrid, data: &[Complex64], m: Mat2) -> Vec<Complex64> {
    if m[0][1].abs() >= 0.1 {
        return three_shears(grid, data, m);
    }
    // M = (M U(s)) U(−s) moves weight into the upper-right entry
    let s = if m[0][0] * m[0][1] >= 0.0 { 1.0 } else { -1.0 };
    let shifted = [
        [m[0][0], m[0][0] * s + m[0][1]],
        [m[1][0], m[1][0] * s + m[1][1]],
    ];
    three_shears(grid, &grid.shear_q(data, -s), shifted)
}

/// `M = L(α) U(β) L(γ)` with `U(s) = [[1, s], [0, 1]]`, `L(s) = [[1, 0], [s, 1]]`;
/// the rightmost factor is applied first.
fn three_shears(grid: &PhaseSpaceGrid, data: &[Complex64], m: Mat2) -> Vec<Complex64> {
    let beta = m[0][1];
    let gamma = (m[0][0] - 1.0) / beta;
    let alpha = (m[1][1] - 1.0) / beta;
    let mut out = data.to_vec();
    if gamma != 0.0 {
        out = grid.shear_p(&out, gamma);
    }
    out = grid.shear_q(&out, beta);
    if alpha != 0.0 {
        out = grid.shear_p(&out, alpha);
    }
    out
}

/// The van Hove action; norm-preserving up to the periodic resampling.
pub fn van_hove_act(chi: &ComplexField, g: &VanHoveTransform) -> Result<ComplexField> {
    let grid = chi.grid();
    let residual = g.compatibility_residual(grid);
    if residual > COMPATIBILITY_TOL {
        return Err(Error::IncompatibleTransform(residual));
    }
    let is_identity_map = g.m == [[1.0, 0.0], [0.0, 1.0]];
    let mut data = if is_identity_map {
        chi.data().to_vec()
    } else {
        resample_linear(grid, chi.data(), g.m)
    };
    if g.t != [0.0, 0.0] {
        data = grid.translate(&data, g.t[0], g.t[1]);
    }
    let inv_hbar = 1.0 / grid.hbar();
    for (k, z) in data.iter_mut().enumerate() {
        let (q, p) = grid.coords(k);
        let w = g.eta_inverse([q, p]);
        *z *= Complex64::from_polar(1.0, -g.phase.eval(w[0], w[1]) * inv_hbar);
    }
    ComplexField::new(grid.clone(), data)
}
