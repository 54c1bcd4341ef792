use thiserror::Error;

use crate::stepper::NewtonReport;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("linear solve failed: {0}")]
    SingularMatrix(String),

    #[error("solution blew up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("newton iteration did not converge at t = {t} ({} iterations, residual {:.3e})", report.iterations, report.final_residual)]
    NewtonFailure { t: f64, report: NewtonReport },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("not detected: {0}")]
    NotDetected(String),
}

pub type Result<T> = std::result::Result<T, Error>;
