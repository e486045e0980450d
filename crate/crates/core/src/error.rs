use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error)]
pub enum GrushinError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid too coarse: spacing {spacing:.3e} exceeds {limit:.3e} required for cutoff {cutoff}")]
    UnderResolved { spacing: f64, limit: f64, cutoff: f64 },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("dense linear algebra failure: {0}")]
    Dense(String),

    #[error("plateau check failed: relative variation {variation:.3e} exceeds {threshold:.1e} on [{lo}, {hi}]")]
    NoPlateau { variation: f64, threshold: f64, lo: f64, hi: f64 },

    #[error("neumann series diverges at term {term}: sup {sup:.3e} above envelope {envelope:.3e}")]
    Divergence { term: usize, sup: f64, envelope: f64 },

    #[error("unfittable data: {0}")]
    Unfittable(String),

    #[error("integration failure: {0}")]
    Integration(String),
}

pub type Result<T> = std::result::Result<T, GrushinError>;

pub(crate) fn invalid(msg: impl Into<String>) -> GrushinError {
    GrushinError::InvalidParameter(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> GrushinError {
    GrushinError::Precondition(msg.into())
}
