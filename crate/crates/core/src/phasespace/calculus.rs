//! Derivatives, brackets, quadrature and pointwise diagnostics on the grid.

use num_complex::Complex64;

use super::field::{ComplexField, RealField};
use crate::error::{Error, Result};

pub fn partial_q(f: &ComplexField) -> ComplexField {
    ComplexField::from_vec(f.grid().clone(), f.grid().derivative_q(f.data()))
}

pub fn partial_p(f: &ComplexField) -> ComplexField {
    ComplexField::from_vec(f.grid().clone(), f.grid().derivative_p(f.data()))
}

/// `{f, g} = ∂_q f ∂_p g − ∂_p f ∂_q g`.
pub fn poisson_bracket(f: &ComplexField, g: &ComplexField) -> Result<ComplexField> {
    f.check_same_grid(g)?;
    let grid = f.grid();
    let fq = grid.derivative_q(f.data());
    let fp = grid.derivative_p(f.data());
    let gq = grid.derivative_q(g.data());
    let gp = grid.derivative_p(g.data());
    let data = (0..grid.len())
        .map(|k| fq[k] * gp[k] - fp[k] * gq[k])
        .collect();
    Ok(ComplexField::from_vec(grid.clone(), data))
}

/// Node sum times `dq dp`; the periodic trapezoid rule.
pub fn integrate(f: &ComplexField) -> Complex64 {
    f.data().iter().sum::<Complex64>() * f.grid().cell_area()
}

pub fn integrate_real(f: &RealField) -> f64 {
    f.integrate()
}

/// Pointwise polar form `chi = sqrt(D) exp(i S / hbar)`.
#[derive(Clone, Debug)]
pub struct PolarDecomposition {
    pub density: RealField,
    /// Action-valued phase in `(-pi hbar, pi hbar]`, no unwrapping across nodes.
    pub phase: RealField,
    /// True where `|chi| > eps_polar`.
    pub mask: Vec<bool>,
}

impl PolarDecomposition {
    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// `sqrt(D) exp(i S/hbar)` on masked nodes, zero elsewhere.
    pub fn reconstruct(&self) -> ComplexField {
        let grid = self.density.grid().clone();
        let hbar = grid.hbar();
        let data = (0..grid.len())
            .map(|k| {
                if self.mask[k] {
                    Complex64::from_polar(self.density.data()[k].sqrt(), self.phase.data()[k] / hbar)
                } else {
                    Complex64::default()
                }
            })
            .collect();
        ComplexField::from_vec(grid, data)
    }
}

pub fn polar_decompose(chi: &ComplexField, eps_polar: f64) -> PolarDecomposition {
    let grid = chi.grid().clone();
    let hbar = grid.hbar();
    let mut density = Vec::with_capacity(grid.len());
    let mut phase = Vec::with_capacity(grid.len());
    let mut mask = Vec::with_capacity(grid.len());
    for z in chi.data() {
        density.push(z.norm_sqr());
        let keep = z.norm() > eps_polar;
        mask.push(keep);
        phase.push(if keep { hbar * z.arg() } else { 0.0 });
    }
    PolarDecomposition {
        density: RealField::from_vec(grid.clone(), density),
        phase: RealField::from_vec(grid, phase),
        mask,
    }
}

/// Fraction of `∫|f|^2` carried by nodes within `margin_fraction` of any edge.
pub fn boundary_mass(f: &ComplexField, margin_fraction: f64) -> Result<f64> {
    let w: Vec<f64> = f.data().iter().map(|z| z.norm_sqr()).collect();
    boundary_fraction(f.grid(), &w, margin_fraction)
}

/// Same as [`boundary_mass`] for a nonnegative node weight.
pub fn boundary_fraction(
    grid: &super::grid::PhaseSpaceGrid,
    weight: &[f64],
    margin_fraction: f64,
) -> Result<f64> {
    if !(margin_fraction > 0.0 && margin_fraction < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "margin fraction must lie in (0, 0.5), got {margin_fraction}"
        )));
    }
    let (nq, np) = (grid.nq(), grid.np());
    let mq = ((margin_fraction * nq as f64).round() as usize).max(1);
    let mp = ((margin_fraction * np as f64).round() as usize).max(1);
    let mut band = 0.0;
    let mut total = 0.0;
    for i in 0..nq {
        let edge_q = i < mq || i >= nq - mq;
        for j in 0..np {
            let v = weight[i * np + j];
            total += v;
            if edge_q || j < mp || j >= np - mp {
                band += v;
            }
        }
    }
    Ok(if total > 0.0 { band / total } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::phasespace::grid::{make_grid, DerivativeScheme, PhaseSpaceGrid};

    fn grid(n: usize, half: f64) -> Arc<PhaseSpaceGrid> {
        make_grid(n, n, [-half, half], [-half, half], 1.0, DerivativeScheme::Spectral).unwrap()
    }

    fn gaussian(g: &Arc<PhaseSpaceGrid>) -> ComplexField {
        ComplexField::from_fn(g.clone(), |q, p| Complex64::new((-q * q - p * p).exp(), 0.0))
    }

    #[test]
    fn fourier_mode_derivative_is_exact() {
        let g = grid(32, 3.0);
        let lq = g.q_length();
        let k = 2.0 * PI / lq;
        let f = ComplexField::from_fn(g.clone(), |q, _| Complex64::from_polar(1.0, k * q));
        let df = partial_q(&f);
        let expected = f.scaled(Complex64::new(0.0, k));
        assert!(df.max_abs_diff(&expected) <= 1e-10);
        assert!(partial_p(&f).max_abs() <= 1e-10);
    }

    #[test]
    fn constant_has_zero_derivative() {
        let g = grid(16, 2.0);
        let f = ComplexField::from_fn(g, |_, _| Complex64::new(3.0, -1.0));
        assert!(partial_q(&f).max_abs() < 1e-13);
        assert!(partial_p(&f).max_abs() < 1e-13);
    }

    #[test]
    fn gaussian_derivative_matches_analytic() {
        let g = grid(128, 8.0);
        let f = gaussian(&g);
        let exact = ComplexField::from_fn(g.clone(), |q, p| {
            Complex64::new(-2.0 * q * (-q * q - p * p).exp(), 0.0)
        });
        assert!(partial_q(&f).max_abs_diff(&exact) <= 1e-8);
    }

    #[test]
    fn central4_converges_at_fourth_order() {
        let errs: Vec<f64> = [64usize, 128]
            .iter()
            .map(|&n| {
                let g = make_grid(n, n, [-8.0, 8.0], [-8.0, 8.0], 1.0, DerivativeScheme::Central4)
                    .unwrap();
                let f = gaussian(&g);
                let exact = ComplexField::from_fn(g.clone(), |q, p| {
                    Complex64::new(-2.0 * p * (-q * q - p * p).exp(), 0.0)
                });
                partial_p(&f).max_abs_diff(&exact)
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 3.7, "observed order {order}");
    }

    #[test]
    fn canonical_bracket_with_gaussian_envelope() {
        let g = grid(128, 8.0);
        // {qE, pE} = E^2 (1 - r^2) for E = exp(-r^2/2); equals 1 at the origin
        let e = |q: f64, p: f64| (-(q * q + p * p) / 2.0).exp();
        let qf = ComplexField::from_fn(g.clone(), |q, p| Complex64::new(q * e(q, p), 0.0));
        let pf = ComplexField::from_fn(g.clone(), |q, p| Complex64::new(p * e(q, p), 0.0));
        let b = poisson_bracket(&qf, &pf).unwrap();
        let exact = ComplexField::from_fn(g.clone(), |q, p| {
            Complex64::new(e(q, p).powi(2) * (1.0 - (q * q + p * p)), 0.0)
        });
        assert!(b.max_abs_diff(&exact) < 1e-10);
        let origin = g.index(64, 64);
        assert!((b.data()[origin] - 1.0).norm() < 1e-10);
    }

    #[test]
    fn self_bracket_vanishes() {
        let g = grid(64, 6.0);
        let f = ComplexField::from_fn(g, |q, p| {
            Complex64::new((-q * q - 0.5 * p * p).exp() * (1.0 + q * p), (q - p).sin() * (-q * q - p * p).exp())
        });
        assert!(poisson_bracket(&f, &f).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn oscillator_energy_commutes_with_its_square() {
        let g = grid(128, 8.0);
        let w = |q: f64, p: f64| (-(q * q + p * p) / 2.0).exp();
        let h = ComplexField::from_fn(g.clone(), |q, p| Complex64::new(0.5 * (q * q + p * p) * w(q, p), 0.0));
        let h2 = ComplexField::from_fn(g.clone(), |q, p| {
            let e = 0.5 * (q * q + p * p) * w(q, p);
            Complex64::new(e * e, 0.0)
        });
        // both are functions of r^2 only, so the bracket vanishes identically
        assert!(poisson_bracket(&h, &h2).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn bracket_mismatched_grids() {
        let a = ComplexField::zeros(grid(16, 2.0));
        let b = ComplexField::zeros(grid(16, 3.0));
        assert!(matches!(poisson_bracket(&a, &b), Err(Error::GridMismatch)));
    }

    #[test]
    fn gaussian_integral() {
        let g = grid(128, 8.0);
        let f = ComplexField::from_fn(g, |q, p| Complex64::new((-q * q - p * p).exp() / PI, 0.0));
        assert!((integrate(&f).re - 1.0).abs() <= 1e-9);
        assert_eq!(integrate(&ComplexField::zeros(grid(16, 1.0))), Complex64::default());
    }

    #[test]
    fn smooth_bump_integral_against_fine_quadrature() {
        // bump exp(-1/(1-r^2)) on the unit disc; reference from a 1-D radial integral
        let bump = |q: f64, p: f64| {
            let r2 = (q * q + p * p) / 4.0;
            if r2 < 1.0 {
                (-1.0 / (1.0 - r2)).exp()
            } else {
                0.0
            }
        };
        // ∫ bump = 2π ∫_0^2 r exp(-1/(1 - r^2/4)) dr via composite Simpson on 20000 panels
        let n = 20000;
        let h = 2.0 / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let r = i as f64 * h;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * r * bump(r, 0.0);
        }
        let mass = 2.0 * PI * s * h / 3.0;
        let g = grid(128, 4.0);
        let f = ComplexField::from_fn(g, |q, p| Complex64::new(bump(q, p) / mass, 0.0));
        assert!((integrate(&f).re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn polar_of_real_positive_field() {
        let g = grid(64, 6.0);
        let chi = ComplexField::from_fn(g, |q, p| {
            Complex64::new(((-(q * q + p * p)).exp() / PI).sqrt(), 0.0)
        });
        let pd = polar_decompose(&chi, 1e-8);
        assert!(pd.masked_count() > 0);
        for k in 0..pd.mask.len() {
            if pd.mask[k] {
                assert_eq!(pd.phase.data()[k], 0.0);
            }
        }
    }

    #[test]
    fn polar_of_plane_phase() {
        let g = make_grid(64, 64, [-4.0, 4.0], [-4.0, 4.0], 0.5, DerivativeScheme::Spectral).unwrap();
        let hbar = g.hbar();
        let chi = ComplexField::from_fn(g.clone(), |q, p| {
            Complex64::from_polar((-(q * q + p * p) / 2.0).exp(), p * q / hbar)
        });
        let pd = polar_decompose(&chi, 1e-6);
        let two_pi_hbar = 2.0 * PI * hbar;
        for (k, (q, p)) in g.nodes().enumerate() {
            if pd.mask[k] {
                let d = (pd.phase.data()[k] - p * q) / two_pi_hbar;
                assert!((d - d.round()).abs() < 1e-12);
            }
        }
        let rec = pd.reconstruct();
        for k in 0..g.len() {
            if pd.mask[k] {
                let rel = (rec.data()[k] - chi.data()[k]).norm() / chi.data()[k].norm();
                assert!(rel <= 1e-10);
            }
        }
    }

    #[test]
    fn polar_of_zero_is_empty() {
        let pd = polar_decompose(&ComplexField::zeros(grid(16, 1.0)), 1e-12);
        assert_eq!(pd.masked_count(), 0);
    }

    #[test]
    fn boundary_mass_cases() {
        let g = grid(128, 8.0);
        let narrow = ComplexField::from_fn(g.clone(), |q, p| Complex64::new((-(q * q + p * p)).exp(), 0.0));
        assert!(boundary_mass(&narrow, 0.1).unwrap() <= 1e-8);

        let uniform = ComplexField::from_fn(g.clone(), |_, _| Complex64::new(1.0, 0.0));
        let band = boundary_mass(&uniform, 0.1).unwrap();
        let expected = 1.0 - (1.0 - 2.0 * 13.0 / 128.0f64).powi(2);
        assert!((band - expected).abs() < 1e-12);
        assert!((band - 0.36).abs() < 0.02);

        let edge = ComplexField::from_fn(g.clone(), |q, _| {
            Complex64::new(if q.abs() > 7.5 { 1.0 } else { 0.0 }, 0.0)
        });
        assert!((boundary_mass(&edge, 0.1).unwrap() - 1.0).abs() < 1e-15);
        assert!(boundary_mass(&edge, 0.6).is_err());
    }
}
