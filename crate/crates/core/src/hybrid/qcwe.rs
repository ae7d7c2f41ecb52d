use num_complex::Complex64;

use super::hamiltonian::HybridFields;
use super::wavefunction::HybridWavefunction;
use crate::error::{Error, Result};
use crate::koopman::cfl_limit;
use crate::phasespace::grid::same_grid;
use crate::phasespace::ComplexField;
use crate::timestep::{rk4_step, StepOptions};

fn check(u: &HybridWavefunction, h: &HybridFields) -> Result<()> {
    if u.dim() != h.dim {
        return Err(Error::DimensionMismatch {
            expected: h.dim,
            found: u.dim(),
        });
    }
    same_grid(u.grid(), &h.grid)
}

/// `∂_t Υ_j = Σ_k [{Ĥ_jk, Υ_k} + (i/ħ)(p ∂_p Ĥ_jk − Ĥ_jk) Υ_k]`.
pub fn qcwe_rhs(u: &HybridWavefunction, h: &HybridFields) -> Result<HybridWavefunction> {
    check(u, h)?;
    let grid = u.grid();
    let n = u.dim();
    let len = grid.len();
    let inv_hbar = 1.0 / grid.hbar();
    let derivs: Vec<(Vec<Complex64>, Vec<Complex64>)> = u
        .components()
        .iter()
        .map(|c| (grid.derivative_q(c.data()), grid.derivative_p(c.data())))
        .collect();
    let mut out = vec![vec![Complex64::default(); len]; n];
    let mut scalar = vec![Complex64::default(); len];
    for (fields, matrix) in &h.terms {
        for k in 0..n {
            if (0..n).all(|j| matrix[j * n + k] == Complex64::default()) {
                continue;
            }
            let (cq, cp) = &derivs[k];
            let chi = u.component(k).data();
            for idx in 0..len {
                scalar[idx] = cp[idx] * fields.d_q[idx] - cq[idx] * fields.d_p[idx]
                    + Complex64::new(0.0, fields.lagrangian[idx] * inv_hbar) * chi[idx];
            }
            for (j, o) in out.iter_mut().enumerate() {
                let m = matrix[j * n + k];
                if m == Complex64::default() {
                    continue;
                }
                for (x, s) in o.iter_mut().zip(&scalar) {
                    *x += m * s;
                }
            }
        }
    }
    HybridWavefunction::new(
        out.into_iter()
            .map(|d| ComplexField::from_vec(grid.clone(), d))
            .collect(),
    )
}

pub fn qcwe_step(
    u: &HybridWavefunction,
    h: &HybridFields,
    dt: f64,
    opts: &StepOptions,
) -> Result<HybridWavefunction> {
    opts.check(dt, cfl_limit(&h.grid, h.max_speed(), opts.cfl))?;
    rk4_step(u, dt, |y| qcwe_rhs(y, h))
}

/// Collective energy `Re Σ_j ∫ conj(Υ_j) iħ ∂_t Υ_j dq dp`.
pub fn hybrid_energy(u: &HybridWavefunction, h: &HybridFields) -> Result<f64> {
    let rhs = qcwe_rhs(u, h)?;
    let hbar = u.grid().hbar();
    Ok((u.inner(&rhs)? * Complex64::new(0.0, hbar)).re)
}

/// `Σ_terms ∫ |f| |Υ† M Υ| dq dp`: an energy magnitude that stays positive when the
/// signed energy itself vanishes.
pub fn energy_scale(u: &HybridWavefunction, h: &HybridFields) -> f64 {
    let n = u.dim();
    let mut total = 0.0;
    for (fields, m) in &h.terms {
        for idx in 0..h.grid.len() {
            let mut quad = Complex64::default();
            for j in 0..n {
                for k in 0..n {
                    quad += u.component(j).data()[idx].conj() * m[j * n + k] * u.component(k).data()[idx];
                }
            }
            total += fields.value[idx].abs() * quad.norm();
        }
    }
    total * h.grid.cell_area()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::hybrid::hamiltonian::{pauli_x, HamiltonianTerm, HybridHamiltonian};
    use crate::koopman::{kvh_classical_density, kvh_rhs, HamiltonianFunction, QuadraticForm};
    use crate::linalg;
    use crate::phasespace::{GridSpec, PhaseSpaceGrid};

    fn grid() -> Arc<PhaseSpaceGrid> {
        GridSpec::square(64, 8.0, 1.0).build().unwrap()
    }

    fn chi(g: &Arc<PhaseSpaceGrid>) -> ComplexField {
        ComplexField::from_fn(g.clone(), |q, p| {
            Complex64::from_polar((-(q - 0.3).powi(2) - 0.7 * p * p).exp(), 0.4 * q + 0.1 * q * p)
        })
    }

    #[test]
    fn one_level_reduces_to_kvh() {
        let g = grid();
        let f = QuadraticForm::new(0.3, 0.6, 0.1, 0.2, -0.1, 0.4);
        let h = HybridHamiltonian::scalar(f.into()).on_grid(&g).unwrap();
        let c = chi(&g);
        let u = HybridWavefunction::new(vec![c.clone()]).unwrap();
        let a = qcwe_rhs(&u, &h).unwrap();
        let b = kvh_rhs(&c, &HamiltonianFunction::from(f).on_grid(&g).unwrap()).unwrap();
        assert!(a.component(0).max_abs_diff(&b) <= 1e-14);
    }

    #[test]
    fn diagonal_hamiltonian_decouples_channels() {
        let g = grid();
        let hh = HybridHamiltonian::figure1();
        let h = hh.on_grid(&g).unwrap();
        let c0 = chi(&g);
        let c1 = c0.scaled(Complex64::new(0.2, -0.5));
        let u = HybridWavefunction::new(vec![c0.clone(), c1.clone()]).unwrap();
        let r = qcwe_rhs(&u, &h).unwrap();
        let ch = hh.diagonal().unwrap().channel_hamiltonians().unwrap();
        let plus = kvh_rhs(&c0, &HamiltonianFunction::from(ch[1]).on_grid(&g).unwrap()).unwrap();
        let minus = kvh_rhs(&c1, &HamiltonianFunction::from(ch[0]).on_grid(&g).unwrap()).unwrap();
        assert!(r.component(0).max_abs_diff(&plus) < 1e-12);
        assert!(r.component(1).max_abs_diff(&minus) < 1e-12);
        // no leakage from a single occupied channel
        let only = HybridWavefunction::new(vec![c0, ComplexField::zeros(g.clone())]).unwrap();
        assert_eq!(qcwe_rhs(&only, &h).unwrap().component(1).max_abs(), 0.0);
    }

    #[test]
    fn constant_sigma_x_rotates_population() {
        let g = grid();
        let c = 0.8;
        let h = HybridHamiltonian::new(2, vec![HamiltonianTerm {
            function: QuadraticForm::constant(c).into(),
            matrix: pauli_x(),
        }])
        .unwrap()
        .on_grid(&g)
        .unwrap();
        let x = chi(&g);
        let u = HybridWavefunction::new(vec![x.clone(), ComplexField::zeros(g.clone())]).unwrap();
        let r = qcwe_rhs(&u, &h).unwrap();
        // per node, ∂_t Υ = −(i c/ħ) σ_x Υ
        assert!(r.component(0).max_abs() == 0.0);
        let expect = x.scaled(Complex64::new(0.0, -c));
        assert!(r.component(1).max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let g = grid();
        let h = HybridHamiltonian::new(2, vec![]).unwrap().on_grid(&g).unwrap();
        let u = HybridWavefunction::product(&chi(&g), &[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        let v = qcwe_step(&u, &h, 0.01, &StepOptions::abort()).unwrap();
        assert_eq!(v.max_abs_diff(&u), 0.0);
    }

    #[test]
    fn constant_hamiltonian_energy() {
        let g = grid();
        let e = 1.3;
        let h = HybridHamiltonian::scalar(QuadraticForm::constant(e).into());
        let two = HybridHamiltonian::new(2, vec![HamiltonianTerm {
            function: QuadraticForm::constant(e).into(),
            matrix: linalg::identity(2),
        }])
        .unwrap();
        let c = chi(&g);
        let c = c.scaled((1.0 / c.norm_sqr().sqrt()).into());
        let u1 = HybridWavefunction::new(vec![c.clone()]).unwrap();
        assert!((hybrid_energy(&u1, &h.on_grid(&g).unwrap()).unwrap() - e).abs() < 1e-12);
        let u2 = HybridWavefunction::product(&c, &[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)]);
        assert!((hybrid_energy(&u2, &two.on_grid(&g).unwrap()).unwrap() - e).abs() < 1e-12);
    }

    #[test]
    fn scalar_energy_is_density_weighted_hamiltonian() {
        let g = GridSpec::square(128, 8.0, 1.0).build().unwrap();
        let f = QuadraticForm::new(0.4, 0.3, 0.1, 0.2, 0.0, -0.3);
        let h = HybridHamiltonian::scalar(f.into()).on_grid(&g).unwrap();
        let c = chi(&g);
        let e = hybrid_energy(&HybridWavefunction::new(vec![c.clone()]).unwrap(), &h).unwrap();
        let rho = kvh_classical_density(&c);
        let direct: f64 = g
            .nodes()
            .zip(rho.density.data())
            .map(|((q, p), r)| r * f.eval(q, p))
            .sum::<f64>()
            * g.cell_area();
        assert!((e - direct).abs() < 1e-9, "{e} {direct}");
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = grid();
        let h = HybridHamiltonian::figure1().on_grid(&g).unwrap();
        let u = HybridWavefunction::new(vec![chi(&g)]).unwrap();
        assert!(matches!(qcwe_rhs(&u, &h), Err(Error::DimensionMismatch { .. })));
    }
}
