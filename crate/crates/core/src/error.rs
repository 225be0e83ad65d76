use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is rank deficient mod {q}")]
    RankDeficient { q: u64 },
    #[error("no unit pivot available in column block mod composite {q}")]
    NonInvertiblePivot { q: u64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("enumeration budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: f64, budget: f64 },
    #[error("width {s} below required {min}")]
    WidthTooSmall { s: f64, min: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("insufficient samples: {got} < {min}")]
    InsufficientSamples { got: usize, min: usize },
    #[error("block sizes sum to {got}, expected {expected}")]
    BlockSumMismatch { expected: usize, got: usize },
    #[error("vector is not in the stage lattice")]
    NotInLattice,
    #[error("insufficient inputs: {got} < {needed}")]
    InsufficientInputs { got: usize, needed: u128 },
    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that signal a violated precondition rather than a failed run.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::NonInvertiblePivot { .. }
                | Error::DimensionMismatch { .. }
                | Error::BadDimensions(_)
                | Error::WidthTooSmall { .. }
                | Error::PreconditionViolated(_)
                | Error::BlockSumMismatch { .. }
                | Error::InfeasibleSchedule(_)
                | Error::Infeasible(_)
                | Error::BudgetExceeded { .. }
        )
    }
}
