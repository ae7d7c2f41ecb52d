//! Classical Koopman wavefunctions: KvN and KvH evolution, the Liouville density
//! momentum map, the van Hove group action and exact characteristics.

pub mod characteristics;
pub mod density;
pub mod evolution;
pub mod hamiltonian;
pub mod momentum_map;
pub mod van_hove;

pub use characteristics::{
    action_along_flow, characteristics_oracle, liouville_advect, transport_oracle, AffineFlow,
};
pub use density::{kvh_classical_density, kvn_density, ClassicalDensityField, DensityProvenance};
pub use evolution::{evolve, kvh_rhs, kvn_rhs, step, KoopmanSolver};
pub use hamiltonian::{cfl_limit, HamiltonianFields, HamiltonianFunction, QuadraticForm};
pub use momentum_map::{momentum_map_pairing, momentum_map_pairing_check, PairingSides};
pub use van_hove::{van_hove_act, VanHoveTransform};
