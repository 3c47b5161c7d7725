use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in {what} at node ({i}, {k})")]
    NonFinite { what: String, i: usize, k: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mode {mode} is not below the Nyquist limit {limit}")]
    BeyondNyquist { mode: usize, limit: usize },

    #[error("{path}:{line}: {msg}")]
    Format { path: PathBuf, line: usize, msg: String },

    #[error("missing pressure for incompressible candidate")]
    MissingPressure,

    #[error("setting mismatch: {0}")]
    SettingMismatch(String),

    #[error("determinant constraint violated: max |det - 1| = {max_dev:e} exceeds {tol:e}")]
    DetConstraint { max_dev: f64, tol: f64 },

    #[error("pressure gradient is not curl-free: max |curl| = {max_curl:e} exceeds {tol:e}")]
    CurlInconsistent { max_curl: f64, tol: f64 },

    #[error("weight σ = {value:e} below σ₀ = {sigma0:e} on the variation support")]
    SigmaBelowFloor { value: f64, sigma0: f64 },

    #[error("flow map left the annulus: radius {radius} outside [{r0}, {r1}]")]
    FlowLeftAnnulus { radius: f64, r0: f64, r1: f64 },

    #[error("candidate is not stationary: max normalized residual {residual:e} exceeds {tol:e}")]
    NotStationary { residual: f64, tol: f64 },

    #[error("hypothesis not verified: {0}")]
    Hypothesis(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
