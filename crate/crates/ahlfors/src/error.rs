//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input system.
    #[error("validation error: {0}")]
    Validation(String),
    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Integration or extrapolation did not reach the requested accuracy.
    #[error("accuracy error: {msg} (best estimate {estimate:e})")]
    Accuracy { msg: String, estimate: f64 },
    /// Linear system too ill-conditioned to trust.
    #[error("conditioning error: condition number {0:e}")]
    Conditioning(f64),
    /// Nonlinear solver failure; carries the final residual norm.
    #[error("solver error: {msg} (residual {residual:e})")]
    Solver { msg: String, residual: f64 },
    /// Path or contour construction failed.
    #[error("geometry error: {0}")]
    Geometry(String),
    /// Coalescing or otherwise degenerate configuration.
    #[error("degeneracy error: {0}")]
    Degeneracy(String),
    /// Parameter outside the admissible range of a construction.
    #[error("admissibility error: {0}")]
    Admissibility(String),
    /// Linear program infeasible or unbounded.
    #[error("lp status: {0}")]
    LpStatus(String),
    /// Prediction requested outside its region of validity.
    #[error("out of region: {0}")]
    OutOfRegion(String),
}
