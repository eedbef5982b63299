use thiserror::Error;

use crate::trace::IterationTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the region where the model is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The requested quantity is not identifiable from the data (e.g. zero weight imbalance).
    #[error("unidentifiable: {0}")]
    Unidentifiable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An iterate became non-finite. The trace holds every finite iterate seen before that.
    #[error("iteration diverged after {} steps", .trace.iterations_used)]
    Divergence { trace: Box<IterationTrace> },

    #[error("{0} did not converge")]
    NonConvergence(String),

    #[error("unknown estimator `{0}`")]
    UnknownEstimator(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by bad input rather than a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::DimensionMismatch { .. }
                | Error::Unidentifiable(_)
                | Error::InvalidArgument(_)
                | Error::UnknownEstimator(_)
        )
    }
}
