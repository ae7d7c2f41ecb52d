//! Periodic phase-space grid, field containers and the calculus shared by every solver.

pub mod calculus;
pub mod field;
pub mod grid;
pub mod snapshot;

pub use calculus::{
    boundary_mass, integrate, partial_p, partial_q, poisson_bracket, polar_decompose,
    PolarDecomposition,
};
pub use field::{ComplexField, MatrixField, RealField};
pub use grid::{make_grid, DerivativeScheme, GridSpec, PhaseSpaceGrid};
pub use snapshot::{Snapshot, SnapshotKind};
