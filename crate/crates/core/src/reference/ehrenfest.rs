use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hybrid::{HybridHamiltonian, QuantumDensityMatrix};
use crate::timestep::rk4_step;

const NORM_TOL: f64 = 1e-10;

/// Mean-field trajectory: a classical point `(q, p)` and a quantum state `ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EhrenfestState {
    pub q: f64,
    pub p: f64,
    pub psi: Vec<Complex64>,
}

impl EhrenfestState {
    pub fn new(q: f64, p: f64, psi: Vec<Complex64>) -> Result<Self> {
        let s = EhrenfestState { q, p, psi };
        let n = s.norm();
        if s.psi.is_empty() || (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "Ehrenfest state must have unit norm, got {n}"
            )));
        }
        Ok(s)
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `ψψ†` as a quantum density matrix.
    pub fn density(&self) -> QuantumDensityMatrix {
        let n = self.psi.len();
        let mut m = vec![Complex64::default(); n * n];
        for j in 0..n {
            for k in 0..n {
                m[j * n + k] = self.psi[j] * self.psi[k].conj();
            }
        }
        QuantumDensityMatrix::from_unnormalized(n, m).expect("square by construction")
    }

    fn pack(&self) -> Vec<f64> {
        let mut v = vec![self.q, self.p];
        for z in &self.psi {
            v.push(z.re);
            v.push(z.im);
        }
        v
    }

    fn unpack(v: &[f64]) -> Self {
        EhrenfestState {
            q: v[0],
            p: v[1],
            psi: v[2..].chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect(),
        }
    }
}

fn expectation(n: usize, m: &[Complex64], psi: &[Complex64]) -> f64 {
    let mut acc = Complex64::default();
    for j in 0..n {
        for k in 0..n {
            acc += psi[j].conj() * m[j * n + k] * psi[k];
        }
    }
    acc.re
}

/// `⟨ψ|Ĥ(q, p)|ψ⟩`, the conserved mean-field energy.
pub fn ehrenfest_energy(s: &EhrenfestState, h: &HybridHamiltonian) -> Result<f64> {
    Ok(expectation(h.dim(), &h.matrix_at(s.q, s.p)?, &s.psi))
}

fn ehrenfest_rhs(v: &[f64], h: &HybridHamiltonian, hbar: f64) -> Result<Vec<f64>> {
    let s = EhrenfestState::unpack(v);
    let n = h.dim();
    let hm = h.matrix_at(s.q, s.p)?;
    let dq = h.d_q_at(s.q, s.p)?;
    let dp = h.d_p_at(s.q, s.p)?;
    let mut out = vec![expectation(n, &dp, &s.psi), -expectation(n, &dq, &s.psi)];
    for j in 0..n {
        let hpsi: Complex64 = (0..n).map(|k| hm[j * n + k] * s.psi[k]).sum();
        // ψ̇ = −(i/ħ) Ĥψ
        let d = Complex64::new(0.0, -1.0 / hbar) * hpsi;
        out.push(d.re);
        out.push(d.im);
    }
    Ok(out)
}

/// One RK4 step of `q̇ = ∂_p⟨Ĥ⟩`, `ṗ = −∂_q⟨Ĥ⟩`, `iħψ̇ = Ĥ(q, p)ψ`.
pub fn ehrenfest_step(
    s: &EhrenfestState,
    h: &HybridHamiltonian,
    dt: f64,
    hbar: f64,
) -> Result<EhrenfestState> {
    if s.psi.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: s.psi.len(),
        });
    }
    let next = rk4_step(&s.pack(), dt, |v| ehrenfest_rhs(v, h, hbar))?;
    Ok(EhrenfestState::unpack(&next))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    use super::*;
    use crate::hybrid::{pauli_x, HamiltonianTerm};
    use crate::koopman::QuadraticForm;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn run(mut s: EhrenfestState, h: &HybridHamiltonian, dt: f64, steps: usize) -> EhrenfestState {
        for _ in 0..steps {
            s = ehrenfest_step(&s, h, dt, 1.0).unwrap();
        }
        s
    }

    #[test]
    fn scalar_oscillator_orbit_closes() {
        let h = HybridHamiltonian::new(2, vec![HamiltonianTerm {
            function: QuadraticForm::oscillator().into(),
            matrix: crate::linalg::identity(2),
        }])
        .unwrap();
        let s0 = EhrenfestState::new(1.0, 0.0, vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let steps = 2000;
        let s = run(s0.clone(), &h, 2.0 * PI / steps as f64, steps);
        assert!((s.q - 1.0).abs() < 1e-10 && s.p.abs() < 1e-10);
        // quarter period lands on (0, −1)
        let quarter = run(s0, &h, 2.0 * PI / steps as f64, steps / 4);
        assert!(quarter.q.abs() < 1e-10 && (quarter.p + 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_matrix_freezes_point_and_rotates_spin() {
        let w = 0.9;
        let h = HybridHamiltonian::new(2, vec![HamiltonianTerm {
            function: QuadraticForm::constant(w).into(),
            matrix: pauli_x(),
        }])
        .unwrap();
        let s = run(EhrenfestState::new(0.3, -0.4, vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap(), &h, 1e-3, 1000);
        assert_eq!((s.q, s.p), (0.3, -0.4));
        assert!((s.psi[0] - c(w.cos(), 0.0)).norm() < 1e-12);
        assert!((s.psi[1] - c(0.0, -w.sin())).norm() < 1e-12);
    }

    #[test]
    fn single_step_matches_fine_reference() {
        let h = HybridHamiltonian::figure1();
        let s0 = EhrenfestState::new(1.0, 0.0, vec![c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)]).unwrap();
        let coarse = ehrenfest_step(&s0, &h, 1e-3, 1.0).unwrap();
        let fine = run(s0, &h, 1e-6, 1000);
        assert!((coarse.q - fine.q).abs() < 1e-12 && (coarse.p - fine.p).abs() < 1e-12);
        for (a, b) in coarse.psi.iter().zip(&fine.psi) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn energy_and_norm_are_conserved() {
        let h = HybridHamiltonian::figure1()
            .with_term(QuadraticForm::new(0.0, 0.0, 0.0, 0.5, 0.0, 0.0).into(), pauli_x())
            .unwrap();
        let s0 = EhrenfestState::new(1.0, 0.5, vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)]).unwrap();
        let e0 = ehrenfest_energy(&s0, &h).unwrap();
        let s = run(s0, &h, 1e-3, 5000);
        assert!((s.norm() - 1.0).abs() < 1e-10);
        assert!((ehrenfest_energy(&s, &h).unwrap() - e0).abs() < 1e-9);
        assert!(s.density().min_eigenvalue() > -1e-12);
    }

    #[test]
    fn rejects_unnormalized_state() {
        assert!(EhrenfestState::new(0.0, 0.0, vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(EhrenfestState::new(0.0, 0.0, vec![]).is_err());
    }
}
