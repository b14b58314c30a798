//! Sparse linear algebra used by the geometric operators.

pub mod cholesky;
pub mod eigen;
pub mod lp;
pub mod sparse;

pub use cholesky::{EnvelopeCholesky, EnvelopeLdl};
pub use eigen::{largest_eigenpairs, EigenPairs};
pub use sparse::{CsrMatrix, TripletBuilder};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot at original row {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("near-zero pivot at original row {pivot}")]
    SingularPivot { pivot: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("mass entry {index} is not positive")]
    NonPositiveMass { index: usize },
    #[error("could not find a positive definite shift above {upper_bound}")]
    ShiftFailed { upper_bound: f64 },
    #[error("eigensolver did not converge with a basis of {basis} vectors")]
    NoConvergence { basis: usize },
    #[error("simplex did not terminate within {iterations} pivots")]
    SimplexStalled { iterations: usize },
}
