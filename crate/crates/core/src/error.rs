use alloc::string::String;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("function undefined on the spectrum: {0}")]
    DomainError(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("polynomial uses variable z{index} but the tuple has {arity} generators")]
    ArityMismatch { index: usize, arity: usize },
    #[error("orbit table does not match the decomposition: {0}")]
    TableMismatch(String),
    #[error("tuple is not {n}-homogeneous: {reason}")]
    NotNHomogeneous { n: usize, reason: String },
    #[error("tuple is not irreducible")]
    NotIrreducible,
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("Monte Carlo budget too small: {samples} samples (minimum {minimum})")]
    McBudgetTooSmall { samples: usize, minimum: usize },
    #[error("n-space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("map is not a *-homomorphism (residual {residual:.3e})")]
    NotAStarHom { residual: f64 },
    #[error("the two points coincide")]
    SamePoint,
    #[error("spectra are not disjoint (distance {distance:.3e})")]
    SpectraNotDisjoint { distance: f64 },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
}

pub type Result<T> = core::result::Result<T, Error>;
