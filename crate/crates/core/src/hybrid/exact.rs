use std::sync::Arc;

use num_complex::Complex64;

use super::hamiltonian::HybridHamiltonian;
use super::wavefunction::HybridWavefunction;
use crate::error::{Error, Result};
use crate::koopman::{characteristics_oracle, HamiltonianFunction};
use crate::phasespace::PhaseSpaceGrid;

/// Exact solution for `Ĥ = H0 𝟙 + H_I Σ` with quadratic `H0`, `H_I`: each
/// `Σ`-eigenchannel follows its own characteristics under `H0 + λ_j H_I`.
pub fn diagonal_channel_solve(
    grid: &Arc<PhaseSpaceGrid>,
    initial: impl Fn(f64, f64) -> Vec<Complex64>,
    h: &HybridHamiltonian,
    t: f64,
) -> Result<HybridWavefunction> {
    let family = h
        .diagonal()
        .ok_or_else(|| Error::InvalidArgument("Hamiltonian is not flagged diagonal".into()))?;
    let channels = family.channel_hamiltonians()?;
    let n = h.dim();
    let u = &family.eigenvectors;
    let mut rotated = Vec::with_capacity(n);
    for (j, hj) in channels.iter().enumerate() {
        // channel amplitude Σ_k conj(U_kj) Υ_k
        let amp = |q: f64, p: f64| {
            let v = initial(q, p);
            (0..n).map(|k| u[k * n + j].conj() * v[k]).sum::<Complex64>()
        };
        rotated.push(characteristics_oracle(grid, amp, &HamiltonianFunction::from(*hj), t)?);
    }
    Ok(HybridWavefunction::new(rotated)?.rotate(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::hamiltonian::pauli_z;
    use crate::hybrid::initial::{HybridInitialState, KoopmanProfile};
    use crate::hybrid::observables::{bloch_and_purity, quantum_density};
    use crate::koopman::QuadraticForm;
    use crate::phasespace::GridSpec;

    fn state() -> HybridInitialState {
        HybridInitialState::figure1(KoopmanProfile::Gaussian { q0: 0.4, p0: 0.0, sigma: 1.0, k_q: 0.0, k_p: 0.3 })
    }

    #[test]
    fn zero_time_returns_initial_state() {
        let g = GridSpec::square(32, 6.0, 1.0).build().unwrap();
        let s = state();
        let u = diagonal_channel_solve(&g, s.evaluator(1.0).unwrap(), &HybridHamiltonian::figure1(), 0.0).unwrap();
        assert!(u.max_abs_diff(&s.sample(&g).unwrap()) < 1e-14);
    }

    #[test]
    fn uncoupled_family_freezes_bloch_vector() {
        let g = GridSpec::square(64, 8.0, 1.0).build().unwrap();
        let h = HybridHamiltonian::diagonal_family(
            QuadraticForm::oscillator().into(),
            QuadraticForm::default().into(),
            pauli_z(),
        )
        .unwrap();
        let s = state();
        let b0 = bloch_and_purity(&quantum_density(&s.sample(&g).unwrap())).unwrap();
        let u = diagonal_channel_solve(&g, s.evaluator(1.0).unwrap(), &h, 2.7).unwrap();
        let b = bloch_and_purity(&quantum_density(&u)).unwrap();
        assert!(b.distance(&b0) < 1e-10);
    }

    #[test]
    fn requires_flagged_hamiltonian() {
        let g = GridSpec::square(16, 4.0, 1.0).build().unwrap();
        let h = HybridHamiltonian::scalar(QuadraticForm::oscillator().into());
        let err = diagonal_channel_solve(&g, |_, _| vec![Complex64::default()], &h, 1.0);
        assert!(err.is_err());
    }
}
