use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{cfl_limit, HamiltonianFields};
use crate::error::Result;
use crate::phasespace::grid::same_grid;
use crate::phasespace::ComplexField;
use crate::timestep::{rk4_step, StepOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KoopmanSolver {
    Rk4Kvn,
    Rk4Kvh,
}

/// `{H, chi}`, so that the Koopman–von Neumann equation reads `∂_t chi = {H, chi}`.
pub fn kvn_rhs(chi: &ComplexField, h: &HamiltonianFields) -> Result<ComplexField> {
    same_grid(chi.grid(), &h.grid)?;
    let grid = chi.grid();
    let cq = grid.derivative_q(chi.data());
    let cp = grid.derivative_p(chi.data());
    let data = (0..grid.len())
        .map(|k| cp[k] * h.d_q[k] - cq[k] * h.d_p[k])
        .collect();
    Ok(ComplexField::from_vec(grid.clone(), data))
}

/// `{H, chi} + (i/hbar)(p ∂_p H − H) chi`: the Koopman–van Hove generator.
pub fn kvh_rhs(chi: &ComplexField, h: &HamiltonianFields) -> Result<ComplexField> {
    let mut out = kvn_rhs(chi, h)?;
    let inv_hbar = 1.0 / chi.grid().hbar();
    for ((o, c), l) in out.data_mut().iter_mut().zip(chi.data()).zip(&h.lagrangian) {
        *o += Complex64::new(0.0, l * inv_hbar) * c;
    }
    Ok(out)
}

pub fn rhs(chi: &ComplexField, h: &HamiltonianFields, solver: KoopmanSolver) -> Result<ComplexField> {
    match solver {
        KoopmanSolver::Rk4Kvn => kvn_rhs(chi, h),
        KoopmanSolver::Rk4Kvh => kvh_rhs(chi, h),
    }
}

/// One RK4 step, after checking `dt` against the CFL bound of `h`.
pub fn step(
    chi: &ComplexField,
    h: &HamiltonianFields,
    dt: f64,
    solver: KoopmanSolver,
    opts: &StepOptions,
) -> Result<ComplexField> {
    opts.check(dt, cfl_limit(&h.grid, h.max_speed(), opts.cfl))?;
    rk4_step(chi, dt, |y| rhs(y, h, solver))
}

/// Repeated steps of size `dt` up to `t` (the last step is shortened to land on `t`).
pub fn evolve(
    chi: &ComplexField,
    h: &HamiltonianFields,
    t: f64,
    dt: f64,
    solver: KoopmanSolver,
    opts: &StepOptions,
) -> Result<ComplexField> {
    let n = (t / dt).round().max(0.0) as usize;
    let mut state = chi.clone();
    for _ in 0..n {
        state = step(&state, h, dt, solver, opts)?;
    }
    let rest = t - n as f64 * dt;
    if rest.abs() > 1e-14 * t.abs().max(1.0) {
        state = step(&state, h, rest, solver, opts)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::koopman::hamiltonian::{HamiltonianFunction, QuadraticForm};
    use crate::phasespace::{polar_decompose, GridSpec, PhaseSpaceGrid};

    fn grid(n: usize, half: f64) -> Arc<PhaseSpaceGrid> {
        GridSpec::square(n, half, 1.0).build().unwrap()
    }

    fn fields(g: &Arc<PhaseSpaceGrid>, f: QuadraticForm) -> HamiltonianFields {
        HamiltonianFunction::from(f).on_grid(g).unwrap()
    }

    fn packet(g: &Arc<PhaseSpaceGrid>) -> ComplexField {
        ComplexField::from_fn(g.clone(), |q, p| {
            let r2 = (q - 0.5).powi(2) + (p + 0.3).powi(2);
            Complex64::from_polar((-r2).exp(), 0.7 * q - 0.2 * p * p)
        })
    }

    #[test]
    fn constant_hamiltonian_gives_zero_bracket() {
        let g = grid(32, 6.0);
        let h = fields(&g, QuadraticForm::constant(2.5));
        assert!(kvn_rhs(&packet(&g), &h).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn free_particle_kvn_is_minus_p_g_prime() {
        let g = grid(64, 8.0);
        let h = fields(&g, QuadraticForm::new(0.0, 0.5, 0.0, 0.0, 0.0, 0.0));
        let chi = ComplexField::from_fn(g.clone(), |q, _| Complex64::new((-q * q).exp(), 0.0));
        let exact = ComplexField::from_fn(g.clone(), |q, p| {
            Complex64::new(-p * (-2.0 * q) * (-q * q).exp(), 0.0)
        });
        assert!(kvn_rhs(&chi, &h).unwrap().max_abs_diff(&exact) < 1e-9);
    }

    #[test]
    fn kvn_matches_bracket_definition() {
        let g = grid(64, 8.0);
        let chi = packet(&g);
        // windowed oscillator energy, sampled so both paths differentiate it spectrally
        let h0 = |q: f64, p: f64| 0.5 * (q * q + p * p) * (-(q * q + p * p) / 8.0).exp();
        let hfield = ComplexField::from_fn(g.clone(), |q, p| Complex64::new(h0(q, p), 0.0));
        let bracket = crate::phasespace::poisson_bracket(&hfield, &chi).unwrap();
        let h = HamiltonianFunction::from_fn(g.clone(), h0).unwrap().on_grid(&g).unwrap();
        assert!(kvn_rhs(&chi, &h).unwrap().max_abs_diff(&bracket) < 1e-12);
    }

    #[test]
    fn kvn_generator_is_antihermitian() {
        let g = grid(64, 8.0);
        let chi = packet(&g);
        let r = kvn_rhs(&chi, &fields(&g, QuadraticForm::new(0.3, 0.5, 0.1, 0.2, 0.0, 1.0))).unwrap();
        assert!(chi.inner(&r).unwrap().re.abs() < 1e-10);
    }

    #[test]
    fn kvh_phase_term_for_kinetic_and_potential() {
        let g = grid(32, 6.0);
        let chi = packet(&g);
        // H = p²/2 → p ∂_p H − H = p²/2 ; H = V(q) = q²/2 → −q²/2
        for (f, lag) in [
            (QuadraticForm::new(0.0, 0.5, 0.0, 0.0, 0.0, 0.0), (|_q: f64, p: f64| 0.5 * p * p) as fn(f64, f64) -> f64),
            (QuadraticForm::new(0.5, 0.0, 0.0, 0.0, 0.0, 0.0), |q: f64, _p: f64| -0.5 * q * q),
        ] {
            let h = fields(&g, f);
            let diff = kvh_rhs(&chi, &h).unwrap().add_scaled(&kvn_rhs(&chi, &h).unwrap(), -1.0);
            for (k, (q, p)) in g.nodes().enumerate() {
                let expect = Complex64::new(0.0, lag(q, p)) * chi.data()[k];
                assert!((diff.data()[k] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_field_has_zero_rhs() {
        let g = grid(16, 3.0);
        let h = fields(&g, QuadraticForm::oscillator());
        assert_eq!(kvh_rhs(&ComplexField::zeros(g.clone()), &h).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn constant_hamiltonian_kvh_is_a_pure_phase() {
        let g = grid(16, 3.0);
        let e = 1.7;
        let h = fields(&g, QuadraticForm::constant(e));
        let chi = packet(&g);
        let dt = 0.01;
        let kvh = step(&chi, &h, dt, KoopmanSolver::Rk4Kvh, &StepOptions::abort()).unwrap();
        // p ∂_p H − H = −E, so chi(dt) = exp(−i E dt / hbar) chi
        let exact = chi.scaled(Complex64::from_polar(1.0, -e * dt));
        assert!(kvh.max_abs_diff(&exact) <= (e * dt).powi(5));
        let kvn = step(&chi, &h, dt, KoopmanSolver::Rk4Kvn, &StepOptions::abort()).unwrap();
        assert!(kvn.max_abs_diff(&chi) == 0.0);
    }

    #[test]
    fn cfl_abort_is_reported() {
        let g = grid(32, 6.0);
        let h = fields(&g, QuadraticForm::oscillator());
        let err = step(&packet(&g), &h, 1.0, KoopmanSolver::Rk4Kvh, &StepOptions::abort()).unwrap_err();
        assert_eq!(err.invariant(), "cfl_bound");
    }

    #[test]
    fn polar_density_is_shared_by_kvn_and_kvh() {
        let g = grid(64, 8.0);
        let h = fields(&g, QuadraticForm::new(0.4, 0.6, 0.1, 0.0, 0.2, 0.5));
        let chi = packet(&g);
        let opts = StepOptions::abort();
        let a = step(&chi, &h, 1e-3, KoopmanSolver::Rk4Kvn, &opts).unwrap();
        let b = step(&chi, &h, 1e-3, KoopmanSolver::Rk4Kvh, &opts).unwrap();
        let da = polar_decompose(&a, 0.0).density;
        let db = polar_decompose(&b, 0.0).density;
        let worst = da.data().iter().zip(db.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
    }
}
