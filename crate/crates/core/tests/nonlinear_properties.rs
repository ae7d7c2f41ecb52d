use std::sync::Arc;

use koopman_hybrid::hybrid::{pauli_x, HybridHamiltonian, HybridWavefunction};
use koopman_hybrid::koopman::{liouville_advect, HamiltonianFunction, QuadraticForm};
use koopman_hybrid::nonlinear::{
    density_from_wavefunction, nqcle_step, HybridDensityField, NodeHamiltonian, NonlinearCorrection, NqcleOptions,
};
use koopman_hybrid::phasespace::{ComplexField, GridSpec, PhaseSpaceGrid};
use koopman_hybrid::timestep::StepOptions;
use num_complex::Complex64;

fn grid() -> Arc<PhaseSpaceGrid> {
    GridSpec::square(128, 8.0, 1.0).build().unwrap()
}

fn rho0(q: f64, p: f64) -> f64 {
    (-((q - 1.5).powi(2) + p * p)).exp() / std::f64::consts::PI
}

/// Steps to `t`, calling `visit` on every state including the first.
fn evolve(
    p: HybridDensityField,
    h: &HybridHamiltonian,
    t: f64,
    dt: f64,
    mut visit: impl FnMut(&HybridDensityField),
) -> HybridDensityField {
    let node = NodeHamiltonian::new(&h.on_grid(p.grid()).unwrap());
    let opts = NqcleOptions { step: StepOptions::abort(), ..Default::default() };
    let mut state = p;
    visit(&state);
    for _ in 0..(t / dt).round() as usize {
        state = nqcle_step(&state, &node, &NonlinearCorrection::Zero, dt, &opts).unwrap().0;
        visit(&state);
    }
    state
}

#[test]
fn one_level_density_is_liouville_transported() {
    let g = grid();
    let h = QuadraticForm::oscillator();
    let chi = ComplexField::from_fn(g.clone(), |q, p| Complex64::new(rho0(q, p).sqrt(), 0.0));
    let p0 = density_from_wavefunction(&HybridWavefunction::product(&chi, &[Complex64::new(1.0, 0.0)]));
    let hybrid = HybridHamiltonian::scalar(HamiltonianFunction::from(h));
    let last = evolve(p0, &hybrid, 1.0, 1e-3, |_| {});
    let exact = liouville_advect(&g, rho0, &HamiltonianFunction::from(h), 1.0).unwrap();
    let l1 = last.classical_density().density.l1_distance(&exact).unwrap();
    assert!(l1 <= 1e-3, "{l1:e}");
}

#[test]
fn coupled_evolution_conserves_mass_and_positivity() {
    let g = grid();
    let chi = ComplexField::from_fn(g.clone(), |q, p| Complex64::new(rho0(q, p).sqrt(), 0.0));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = HybridWavefunction::product(&chi, &[Complex64::new(s, 0.0), Complex64::new(0.0, s)]);
    let h = HybridHamiltonian::figure1()
        .with_term(HamiltonianFunction::from(QuadraticForm::new(0.0, 0.0, 0.0, 0.4, 0.0, 0.0)), pauli_x())
        .unwrap();
    let p0 = density_from_wavefunction(&u);
    let m0 = p0.mass();
    evolve(p0, &h, 0.5, 1e-3, |p| {
        assert!((p.mass() - m0).abs() < 1e-10, "{:e}", p.mass() - m0);
        assert!(p.min_eigenvalue() >= -1e-10, "{:e}", p.min_eigenvalue());
        assert!(p.hermitian_residual() < 1e-14);
    });
}
