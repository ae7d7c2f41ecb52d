use serde::{Deserialize, Serialize};

use crate::phasespace::{ComplexField, RealField};

/// Which construction produced a classical density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityProvenance {
    Kvn,
    KvhMomentumMap,
    HybridMomentumMap,
    NonlinearTrace,
    LiouvilleReference,
}

impl DensityProvenance {
    /// Only the plain modulus-squared construction is nonnegative by construction.
    pub fn guarantees_positivity(self) -> bool {
        matches!(self, DensityProvenance::Kvn | DensityProvenance::LiouvilleReference)
    }
}

#[derive(Clone, Debug)]
pub struct ClassicalDensityField {
    pub density: RealField,
    pub provenance: DensityProvenance,
}

impl ClassicalDensityField {
    pub fn mass(&self) -> f64 {
        self.density.integrate()
    }

    pub fn min(&self) -> f64 {
        self.density.min()
    }
}

/// `|chi|²`, the density carried by Koopman–von Neumann wavefunctions.
pub fn kvn_density(chi: &ComplexField) -> ClassicalDensityField {
    ClassicalDensityField {
        density: chi.modulus_sqr(),
        provenance: DensityProvenance::Kvn,
    }
}

/// `|chi|² + ∂_p(p |chi|²) + hbar Im{conj(chi), chi}`, accumulated into `acc`.
pub(crate) fn accumulate_momentum_map(chi: &ComplexField, acc: &mut [f64]) {
    let grid = chi.grid();
    let hbar = grid.hbar();
    let cq = grid.derivative_q(chi.data());
    let cp = grid.derivative_p(chi.data());
    let weighted: Vec<f64> = chi
        .data()
        .iter()
        .enumerate()
        .map(|(k, z)| grid.coords(k).1 * z.norm_sqr())
        .collect();
    let flux = grid.derivative_p_real(&weighted);
    for (k, a) in acc.iter_mut().enumerate() {
        // {conj(chi), chi} = 2i Im(conj(∂_q chi) ∂_p chi)
        let bracket = 2.0 * (cq[k].conj() * cp[k]).im;
        *a += chi.data()[k].norm_sqr() + flux[k] + hbar * bracket;
    }
}

/// The Liouville density carried by a Koopman–van Hove wavefunction.
pub fn kvh_classical_density(chi: &ComplexField) -> ClassicalDensityField {
    let mut acc = vec![0.0; chi.grid().len()];
    accumulate_momentum_map(chi, &mut acc);
    ClassicalDensityField {
        density: RealField::from_vec(chi.grid().clone(), acc),
        provenance: DensityProvenance::KvhMomentumMap,
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use num_complex::Complex64;

    use super::*;
    use crate::phasespace::GridSpec;

    #[test]
    fn real_gaussian_density_matches_symbolic_form() {
        let g = GridSpec::square(128, 8.0, 1.0).build().unwrap();
        // chi = sqrt(exp(-2 H0)/pi): |chi|² = G, ∂_p(p G) = (1 − 2p²) G
        let chi = ComplexField::from_fn(g.clone(), |q, p| {
            Complex64::new(((-(q * q + p * p)).exp() / PI).sqrt(), 0.0)
        });
        let rho = kvh_classical_density(&chi);
        for (k, (q, p)) in g.nodes().enumerate() {
            let gauss = (-(q * q + p * p)).exp() / PI;
            assert!((rho.density.data()[k] - (2.0 - 2.0 * p * p) * gauss).abs() < 1e-10);
        }
        assert!((rho.mass() - 1.0).abs() < 1e-9);
        assert!(rho.min() < 0.0);
        assert_eq!(rho.provenance, DensityProvenance::KvhMomentumMap);
    }

    #[test]
    fn plane_phase_density_matches_symbolic_form() {
        let hbar = 0.5;
        let g = GridSpec::square(128, 8.0, hbar).build().unwrap();
        // chi = sqrt(D) e^{i p q / hbar}: hbar Im{conj chi, chi} = {D, pq} = q ∂_q D − p ∂_p D
        let d = |q: f64, p: f64| (-(q * q + 2.0 * p * p)).exp();
        let chi = ComplexField::from_fn(g.clone(), |q, p| {
            Complex64::from_polar(d(q, p).sqrt(), p * q / hbar)
        });
        let rho = kvh_classical_density(&chi);
        for (k, (q, p)) in g.nodes().enumerate() {
            let dv = d(q, p);
            let d_q = -2.0 * q * dv;
            let d_p = -4.0 * p * dv;
            let expect = dv + (dv + p * d_p) + (q * d_q - p * d_p);
            assert!((rho.density.data()[k] - expect).abs() < 1e-9, "{q} {p}");
        }
    }

    #[test]
    fn kvn_density_is_nonnegative() {
        let g = GridSpec::square(32, 4.0, 1.0).build().unwrap();
        let chi = ComplexField::from_fn(g, |q, p| Complex64::new(q - p, q * p));
        let rho = kvn_density(&chi);
        assert!(rho.min() >= 0.0);
        assert!(rho.provenance.guarantees_positivity());
    }
}
