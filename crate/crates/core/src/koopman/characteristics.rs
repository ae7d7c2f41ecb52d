//! Exact solutions along the Hamiltonian flow of quadratic Hamiltonians.
//!
//! For `H = a q² + b p² + c qp + d q + e p + f` the flow solves `ż = A z + g` with
//! `A = [[c, 2b], [−2a, −c]]` and `g = (e, −d)`. Since `A² = Δ 𝟙` with `Δ = c² − 4ab`,
//! the propagator is `exp(A t) = C(t) 𝟙 + S(t) A` with `C`, `S` trigonometric,
//! hyperbolic or polynomial depending on the sign of `Δ`. Initial data are evaluated
//! analytically at back-flowed points, so the oracle never interpolates.

use std::sync::Arc;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use super::hamiltonian::{HamiltonianFunction, QuadraticForm};
use crate::error::{Error, Result};
use crate::phasespace::{ComplexField, PhaseSpaceGrid, RealField};

const GAUSS_POINTS: usize = 64;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineFlow {
    a: Mat2,
    g: [f64; 2],
}

/// `C(t)`, `S(t)` and `∫₀ᵗ S` for `A² = Δ 𝟙`.
fn propagator_scalars(delta: f64, t: f64) -> (f64, f64, f64) {
    let x = delta * t * t;
    if x.abs() <= 1.0 {
        // power series in x = Δt²
        let (mut c, mut s, mut si) = (0.0, 0.0, 0.0);
        let mut term = 1.0; // x^k / (2k)!
        for k in 0..30 {
            let k2 = 2.0 * k as f64;
            c += term;
            s += term / (k2 + 1.0);
            si += term / ((k2 + 1.0) * (k2 + 2.0));
            term *= x / ((k2 + 1.0) * (k2 + 2.0));
        }
        (c, s * t, si * t * t)
    } else if delta < 0.0 {
        let w = (-delta).sqrt();
        let c = (w * t).cos();
        (c, (w * t).sin() / w, (1.0 - c) / (w * w))
    } else {
        let w = delta.sqrt();
        let c = (w * t).cosh();
        (c, (w * t).sinh() / w, (c - 1.0) / (w * w))
    }
}

impl AffineFlow {
    pub fn new(h: &QuadraticForm) -> Self {
        AffineFlow {
            a: [[h.qp, 2.0 * h.pp], [-2.0 * h.qq, -h.qp]],
            g: [h.p, -h.q],
        }
    }

    /// `Δ = c² − 4ab`; negative for elliptic (rotating) flows.
    pub fn discriminant(&self) -> f64 {
        self.a[0][0] * self.a[0][0] + self.a[0][1] * self.a[1][0]
    }

    /// `Φ_t(z) = M z + v`.
    pub fn map(&self, t: f64) -> (Mat2, [f64; 2]) {
        let (c, s, si) = propagator_scalars(self.discriminant(), t);
        let a = self.a;
        let m = [
            [c + s * a[0][0], s * a[0][1]],
            [s * a[1][0], c + s * a[1][1]],
        ];
        // ∫₀ᵗ exp(A s) ds = S 𝟙 + Si A
        let v = [
            s * self.g[0] + si * (a[0][0] * self.g[0] + a[0][1] * self.g[1]),
            s * self.g[1] + si * (a[1][0] * self.g[0] + a[1][1] * self.g[1]),
        ];
        (m, v)
    }

    pub fn apply(&self, t: f64, z: [f64; 2]) -> [f64; 2] {
        let (m, v) = self.map(t);
        [
            m[0][0] * z[0] + m[0][1] * z[1] + v[0],
            m[1][0] * z[0] + m[1][1] * z[1] + v[1],
        ]
    }
}

/// `L = p ∂_p H − H` as a quadratic form: `(−a, b, 0, −d, 0, −f)`.
pub fn lagrangian_form(h: &QuadraticForm) -> QuadraticForm {
    QuadraticForm::new(-h.qq, h.pp, 0.0, -h.q, 0.0, -h.c)
}

/// `∫₀ᵗ L(Φ_s z0) ds` as a quadratic form in the starting point `z0`, by composite
/// Gauss–Legendre quadrature along the exact trajectory.
pub fn action_along_flow(h: &QuadraticForm, t: f64) -> QuadraticForm {
    let flow = AffineFlow::new(h);
    let lag = lagrangian_form(h);
    if t == 0.0 || lag.is_zero() {
        return QuadraticForm::default();
    }
    let rule = GaussLegendre::new(GAUSS_POINTS).expect("64-point rule");
    let rate = 1.0 + flow.discriminant().abs().sqrt();
    let panels = (t.abs() * rate).ceil().max(1.0) as usize;
    let width = t / panels as f64;
    let mut total = QuadraticForm::default();
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * width;
        for &(x, w) in rule.as_node_weight_pairs() {
            let (m, v) = flow.map(mid + 0.5 * width * x);
            total = total.add(&lag.compose_affine(m, v).scale(0.5 * width * w));
        }
    }
    total
}

fn require_quadratic(h: &HamiltonianFunction) -> Result<&QuadraticForm> {
    h.as_quadratic().ok_or(Error::NonQuadratic)
}

/// `chi(z, t) = chi0(Φ_{−t} z) exp((i/hbar) ∫₀ᵗ L(Φ_{s−t} z) ds)` on the grid nodes.
pub fn characteristics_oracle(
    grid: &Arc<PhaseSpaceGrid>,
    chi0: impl Fn(f64, f64) -> Complex64,
    h: &HamiltonianFunction,
    t: f64,
) -> Result<ComplexField> {
    let h = require_quadratic(h)?;
    let (m, v) = AffineFlow::new(h).map(-t);
    let action = action_along_flow(h, t);
    let inv_hbar = 1.0 / grid.hbar();
    let data = grid
        .nodes()
        .map(|(q, p)| {
            let q0 = m[0][0] * q + m[0][1] * p + v[0];
            let p0 = m[1][0] * q + m[1][1] * p + v[1];
            chi0(q0, p0) * Complex64::from_polar(1.0, action.eval(q0, p0) * inv_hbar)
        })
        .collect();
    ComplexField::new(grid.clone(), data)
}

/// Phase-free transport `chi(z, t) = chi0(Φ_{−t} z)`, the exact Koopman–von Neumann solution.
pub fn transport_oracle(
    grid: &Arc<PhaseSpaceGrid>,
    chi0: impl Fn(f64, f64) -> Complex64,
    h: &HamiltonianFunction,
    t: f64,
) -> Result<ComplexField> {
    let h = require_quadratic(h)?;
    let flow = AffineFlow::new(h);
    let data = grid
        .nodes()
        .map(|(q, p)| {
            let z0 = flow.apply(-t, [q, p]);
            chi0(z0[0], z0[1])
        })
        .collect();
    ComplexField::new(grid.clone(), data)
}

/// Liouville transport of a density: `rho(z, t) = rho0(Φ_{−t} z)`.
pub fn liouville_advect(
    grid: &Arc<PhaseSpaceGrid>,
    rho0: impl Fn(f64, f64) -> f64,
    h: &HamiltonianFunction,
    t: f64,
) -> Result<RealField> {
    let h = require_quadratic(h)?;
    let flow = AffineFlow::new(h);
    let data = grid
        .nodes()
        .map(|(q, p)| {
            let z0 = flow.apply(-t, [q, p]);
            rho0(z0[0], z0[1])
        })
        .collect();
    RealField::new(grid.clone(), data)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::phasespace::GridSpec;

    fn packet(q: f64, p: f64) -> Complex64 {
        let r2 = (q - 0.5).powi(2) + (p + 0.3).powi(2);
        Complex64::from_polar((-r2).exp(), 0.7 * q - 0.2 * p * p)
    }

    fn integrate_rk4(h: &QuadraticForm, z: [f64; 2], t: f64, n: usize) -> [f64; 2] {
        let f = |z: [f64; 2]| [h.d_p(z[0], z[1]), -h.d_q(z[0], z[1])];
        let dt = t / n as f64;
        let mut z = z;
        for _ in 0..n {
            let k1 = f(z);
            let k2 = f([z[0] + 0.5 * dt * k1[0], z[1] + 0.5 * dt * k1[1]]);
            let k3 = f([z[0] + 0.5 * dt * k2[0], z[1] + 0.5 * dt * k2[1]]);
            let k4 = f([z[0] + dt * k3[0], z[1] + dt * k3[1]]);
            for i in 0..2 {
                z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        z
    }

    #[test]
    fn flow_matches_numerical_integration_in_all_regimes() {
        for h in [
            QuadraticForm::new(0.75, 0.25, 0.0, 0.3, -0.2, 0.5), // elliptic
            QuadraticForm::new(-0.5, 0.5, 0.2, 0.0, 1.0, 0.0),   // hyperbolic
            QuadraticForm::new(0.0, 0.5, 0.0, 0.4, 0.0, 0.0),    // parabolic
        ] {
            let z = AffineFlow::new(&h).apply(1.7, [0.4, -1.1]);
            let r = integrate_rk4(&h, [0.4, -1.1], 1.7, 20000);
            assert!((z[0] - r[0]).abs() < 1e-11 && (z[1] - r[1]).abs() < 1e-11, "{h:?}");
        }
    }

    #[test]
    fn symplectic_and_invertible() {
        let flow = AffineFlow::new(&QuadraticForm::new(0.3, 0.8, -0.4, 0.1, 0.2, 0.0));
        let (m, _) = flow.map(2.3);
        assert!((m[0][0] * m[1][1] - m[0][1] * m[1][0] - 1.0).abs() < 1e-13);
        let z = flow.apply(-2.3, flow.apply(2.3, [1.0, -0.5]));
        assert!((z[0] - 1.0).abs() < 1e-12 && (z[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn oscillator_action_vanishes_over_a_period() {
        let action = action_along_flow(&QuadraticForm::oscillator(), 2.0 * PI);
        assert!(action.coefficients().iter().all(|c| c.abs() < 1e-12), "{action:?}");
    }

    #[test]
    fn oscillator_returns_after_full_period() {
        let g = GridSpec::square(32, 6.0, 1.0).build().unwrap();
        let h = HamiltonianFunction::from(QuadraticForm::oscillator());
        let chi = characteristics_oracle(&g, packet, &h, 2.0 * PI).unwrap();
        let chi0 = ComplexField::from_fn(g, packet);
        assert!(chi.max_abs_diff(&chi0) < 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let g = GridSpec::square(16, 4.0, 1.0).build().unwrap();
        let h = HamiltonianFunction::from(QuadraticForm::new(0.3, 0.2, 0.1, 0.0, 1.0, 2.0));
        let chi = characteristics_oracle(&g, packet, &h, 0.0).unwrap();
        assert_eq!(chi.max_abs_diff(&ComplexField::from_fn(g, packet)), 0.0);
    }

    #[test]
    fn free_flow_closed_form() {
        let hbar = 0.7;
        let g = GridSpec::square(16, 4.0, hbar).build().unwrap();
        let h = HamiltonianFunction::from(QuadraticForm::new(0.0, 0.5, 0.0, 0.0, 0.0, 0.0));
        let t = 1.3;
        let chi = characteristics_oracle(&g, packet, &h, t).unwrap();
        let exact = ComplexField::from_fn(g, |q, p| {
            packet(q - p * t, p) * Complex64::from_polar(1.0, 0.5 * p * p * t / hbar)
        });
        assert!(chi.max_abs_diff(&exact) < 1e-12);
    }

    #[test]
    fn action_matches_direct_quadrature_for_squeezed_oscillator() {
        let h = QuadraticForm::new(0.75, 0.25, 0.0, 0.0, 0.0, 0.5);
        let lag = lagrangian_form(&h);
        let flow = AffineFlow::new(&h);
        let (t, z0) = (3.1, [0.8, -0.4]);
        // composite Simpson with many panels as an independent reference
        let n = 20000;
        let dt = t / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let z = flow.apply(i as f64 * dt, z0);
            s += w * lag.eval(z[0], z[1]);
        }
        s *= dt / 3.0;
        assert!((action_along_flow(&h, t).eval(z0[0], z0[1]) - s).abs() < 1e-12);
    }

    #[test]
    fn sampled_hamiltonian_is_rejected() {
        let g = GridSpec::square(8, 1.0, 1.0).build().unwrap();
        let h = HamiltonianFunction::from_fn(g.clone(), |q, p| q.powi(4) + p * p).unwrap();
        assert!(matches!(
            characteristics_oracle(&g, packet, &h, 1.0),
            Err(Error::NonQuadratic)
        ));
    }
}
