//! Matrix-valued hybrid densities `P̂(q, p)` evolved by the nonlinear density-field
//! equation `iħ∂_t P̂ + iħ div(P̂⟨X_Ĥ⟩) = [Ĥ + ħF̂, P̂]`.
//!
//! The trace obeys a continuity equation with the mean velocity
//! `⟨X_Ĥ⟩ = Tr(X_Ĥ P̂)/Tr P̂`, so the classical density stays nonnegative at the
//! continuous level, unlike the momentum-map density of the wave equation.

pub mod equation;
pub mod field;

pub use equation::{
    matrix_bracket, mean_velocity, nqcle_rhs, nqcle_step, resolve_eps_rho, MeanVelocity,
    NodeHamiltonian, NonlinearCorrection, NqcleDiagnostics, NqcleOptions, TransportScheme,
};
pub use field::{density_from_wavefunction, HybridDensityField, TOL_PSD};
