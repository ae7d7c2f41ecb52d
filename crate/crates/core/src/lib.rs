//! Koopman wavefunctions on classical phase space and hybrid quantum-classical dynamics.
//!
//! The crate evolves complex wavefunctions `chi(q, p)` under the Koopman-von Neumann
//! and Koopman-van Hove equations, spinor-valued hybrid wavefunctions under the
//! quantum-classical wave equation, and matrix-valued hybrid densities under the
//! nonlinear density-field equation. Exact characteristics, Ehrenfest mean-field and
//! truncated fully quantum models are provided as independent references.

pub mod error;
pub mod experiments;
pub mod hybrid;
pub mod koopman;
pub mod linalg;
pub mod nonlinear;
pub mod phasespace;
pub mod reference;
pub mod timestep;

pub use error::{Error, Result};
