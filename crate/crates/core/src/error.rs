//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    /// Two vectors of different dimension were combined.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A value that must be finite was NaN or infinite.
    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// No sample point fell within the bandwidth of the query point.
    /// Carries the smallest observed distance so callers can enlarge `h`.
    #[error("no neighbors within bandwidth (closest point at distance {min_distance})")]
    NoNeighbors { min_distance: f64 },

    /// The plug-in conditional variance collapsed to zero; the standardized
    /// statistic is unusable at this query point.
    #[error("degenerate variance at query point")]
    DegenerateVariance,

    /// An iterative limit evaluation did not settle below its tolerance.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Bandwidth selection failed because no grid value produced any
    /// leave-one-out prediction.
    #[error("bandwidth selection failed: {0}")]
    Selection(String),

    /// A replicated experiment produced too many unusable replicates.
    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}
