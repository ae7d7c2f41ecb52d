//! Independent baselines: Ehrenfest mean-field trajectories, the truncated fully
//! quantum oscillator ⊗ n-level model, and Wigner transforms of its states.

pub mod composite;
pub mod ehrenfest;
pub mod wigner;

pub use composite::{
    build_composite_hamiltonian, quantize_quadratic, quantum_evolve, spin_reduced_density,
    CompositeQuantumState, QuantumPropagator,
};
pub use ehrenfest::{ehrenfest_energy, ehrenfest_step, EhrenfestState};
pub use wigner::{position_density, wigner_transform, WignerField};
