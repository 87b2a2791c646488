use thiserror::Error;

/// Errors produced by estimators, similarity weighting, simulation and portfolio construction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("degenerate column: asset `{asset}` has zero sample variance in the window")]
    DegenerateColumn { asset: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid horizon: horizon {horizon} must exceed the probe window {window}")]
    InvalidHorizon { horizon: usize, window: usize },

    #[error("degenerate similarity: every corrected similarity value is zero")]
    DegenerateSimilarity,

    #[error("degenerate restriction: no weight exceeds the {s}-th largest weight")]
    DegenerateRestriction { s: usize },

    #[error("not positive semidefinite: minimum eigenvalue {min_eigenvalue:e} below tolerance {tolerance:e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64, tolerance: f64 },

    #[error("matrix invariant violated: {0}")]
    InvariantViolation(String),

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("singular covariance matrix ({reason}); a ridge of {ridge_hint:e} on the diagonal was tried")]
    SingularCovariance { reason: String, ridge_hint: f64 },

    #[error("degenerate frontier: expected returns are parallel to the budget vector")]
    DegenerateFrontier,
}

pub type Result<T> = std::result::Result<T, Error>;
