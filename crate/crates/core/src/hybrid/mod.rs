//! Hybrid quantum-classical wavefunctions `Υ(q, p) ∈ ℂⁿ`: the quantum-classical wave
//! equation, its quantum and classical density momentum maps, and the exact
//! eigenchannel solution for commuting coupling families.

pub mod exact;
pub mod hamiltonian;
pub mod initial;
pub mod observables;
pub mod qcwe;
pub mod wavefunction;

pub use exact::diagonal_channel_solve;
pub use hamiltonian::{
    figure1_coupling, pauli_x, pauli_y, pauli_z, DiagonalFamily, HamiltonianTerm, HybridFields,
    HybridHamiltonian,
};
pub use initial::{HybridInitialState, KoopmanProfile};
pub use observables::{
    bloch_and_purity, hybrid_classical_density, quantum_density, BlochObservables,
    QuantumDensityMatrix,
};
pub use qcwe::{energy_scale, hybrid_energy, qcwe_rhs, qcwe_step};
pub use wavefunction::HybridWavefunction;
