use super::density::kvh_classical_density;
use super::evolution::kvh_rhs;
use super::hamiltonian::HamiltonianFunction;
use crate::error::Result;
use crate::phasespace::ComplexField;

/// Both sides of `Ω(ξ_V(χ), χ) = 2⟨J(χ), ξ⟩`, with `Ω(a, b) = 2ħ Im⟨a|b⟩`,
/// `ξ_V(χ) = {ξ, χ} + (i/ħ)(p ∂_p ξ − ξ) χ` and `J` the Liouville density of `χ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairingSides {
    pub symplectic: f64,
    pub momentum_map: f64,
}

impl PairingSides {
    pub fn residual(&self) -> f64 {
        (self.symplectic - self.momentum_map).abs()
    }
}

pub fn momentum_map_pairing(chi: &ComplexField, xi: &HamiltonianFunction) -> Result<PairingSides> {
    let fields = xi.on_grid(chi.grid())?;
    let generated = kvh_rhs(chi, &fields)?;
    let symplectic = 2.0 * chi.grid().hbar() * generated.inner(chi)?.im;
    let rho = kvh_classical_density(chi);
    let paired: f64 = rho
        .density
        .data()
        .iter()
        .zip(&fields.value)
        .map(|(r, x)| r * x)
        .sum::<f64>()
        * chi.grid().cell_area();
    Ok(PairingSides {
        symplectic,
        momentum_map: 2.0 * paired,
    })
}

/// Absolute residual of the momentum-map pairing identity.
pub fn momentum_map_pairing_check(chi: &ComplexField, xi: &HamiltonianFunction) -> Result<f64> {
    Ok(momentum_map_pairing(chi, xi)?.residual())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use num_complex::Complex64;

    use super::*;
    use crate::koopman::hamiltonian::QuadraticForm;
    use crate::phasespace::GridSpec;

    #[test]
    fn gaussian_with_position_generator() {
        let g = GridSpec::square(128, 8.0, 1.0).build().unwrap();
        let chi = ComplexField::from_fn(g, |q, p| {
            Complex64::from_polar(((-(q - 0.4).powi(2) - p * p).exp() / PI).sqrt(), 0.3 * p)
        });
        let xi = HamiltonianFunction::from(QuadraticForm::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0));
        let sides = momentum_map_pairing(&chi, &xi).unwrap();
        // ∫ρ_c q = ⟨q⟩ + ∫q {D, S} = 0.4 − 0.3 with S = 0.3 p
        assert!((sides.momentum_map - 0.2).abs() < 1e-8, "{sides:?}");
        assert!(sides.residual() <= 1e-6);
    }

    #[test]
    fn zero_state_has_zero_residual() {
        let g = GridSpec::square(16, 4.0, 1.0).build().unwrap();
        let xi = HamiltonianFunction::from(QuadraticForm::oscillator());
        assert_eq!(momentum_map_pairing_check(&ComplexField::zeros(g), &xi).unwrap(), 0.0);
    }
}
