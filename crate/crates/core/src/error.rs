use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid sizes must be even, got nq={nq}, np={np}")]
    OddSize { nq: usize, np: usize },

    #[error("grid sizes must be at least 8, got nq={nq}, np={np}")]
    GridTooSmall { nq: usize, np: usize },

    #[error("grid extents must be ordered, got [{min}, {max}] along {axis}")]
    InvertedExtents { axis: &'static str, min: f64, max: f64 },

    #[error("hbar must be positive and finite, got {0}")]
    NonPositiveHbar(f64),

    #[error("fields are defined on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("time step {dt:e} exceeds the CFL limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("operation requires quadratic Hamiltonian entries")]
    NonQuadratic,

    #[error("van Hove pair violates the symplectic potential condition (residual {0:e})")]
    IncompatibleTransform(f64),

    #[error("affine map is not symplectic (det = {0})")]
    NotSymplectic(f64),

    #[error("matrix field is not Hermitian (residual {0:e})")]
    NonHermitian(f64),

    #[error("expected a two-level density matrix, got dimension {0}")]
    NotTwoLevel(usize),

    #[error("oscillator truncation tail {tail:e} exceeds {limit:e} at t = {t}; increase n_osc")]
    TruncationTail { tail: f64, limit: f64, t: f64 },

    #[error("grid too coarse for oscillator level {level}: spacing {spacing} > {max_spacing}")]
    GridTooCoarse {
        level: usize,
        spacing: f64,
        max_spacing: f64,
    },

    #[error("boundary mass {mass:e} exceeds {limit:e} at t = {t}")]
    BoundaryMass { mass: f64, limit: f64, t: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable name of the violated invariant.
    pub fn invariant(&self) -> &'static str {
        match self {
            Error::OddSize { .. } => "even_grid_size",
            Error::GridTooSmall { .. } => "min_grid_size",
            Error::InvertedExtents { .. } => "ordered_extents",
            Error::NonPositiveHbar(_) => "positive_hbar",
            Error::GridMismatch => "same_grid",
            Error::DimensionMismatch { .. } => "matching_dimension",
            Error::NonFinite(_) => "finite_values",
            Error::CflViolation { .. } => "cfl_bound",
            Error::NonQuadratic => "quadratic_hamiltonian",
            Error::IncompatibleTransform(_) => "van_hove_compatibility",
            Error::NotSymplectic(_) => "unit_determinant",
            Error::NonHermitian(_) => "hermitian",
            Error::NotTwoLevel(_) => "two_level",
            Error::TruncationTail { .. } => "truncation_tail",
            Error::GridTooCoarse { .. } => "wigner_nyquist",
            Error::BoundaryMass { .. } => "boundary_mass",
            Error::InvalidArgument(_) => "argument",
            Error::Format(_) => "snapshot_format",
            Error::Io(_) => "io",
        }
    }
}
