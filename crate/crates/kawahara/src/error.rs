//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("profile rejected: {0}")]
    ProfileRejected(String),

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("eigensolver failed: {0}")]
    EigenFailed(String),

    #[error("no sign change in bracket [{lo}, {hi}]: J({lo}) = {j_lo:.6}, J({hi}) = {j_hi:.6}")]
    NoSignChange { lo: f64, hi: f64, j_lo: f64, j_hi: f64 },

    #[error("iteration did not converge: {0}")]
    NotConverged(String),

    #[error("blow-up detected at t = {t}: max |u| = {max:.3e}")]
    BlowUp { t: f64, max: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
