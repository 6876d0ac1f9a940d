use thiserror::Error;

/// Errors raised by the numerical kernels, the problem builders and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("feasible set is empty: minimum volume {min_volume:e} exceeds budget {budget:e}")]
    EmptySet { min_volume: f64, budget: f64 },

    #[error("infeasible volume budget: minimum volume {min_volume:e} exceeds budget {budget:e}")]
    InfeasibleVolumeBudget { min_volume: f64, budget: f64 },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical breakdown at iteration {k}: {reason}")]
    NumericalBreakdown { k: usize, reason: String },

    #[error("iteration index must be at least 1, got {0}")]
    InvalidIteration(usize),

    #[error("trace does not retain iterate states")]
    MissingStates,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
