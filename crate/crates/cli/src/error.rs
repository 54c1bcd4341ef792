use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::ParseError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Parse(#[from] ParseError),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("solution blew up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Input(_) => 2,
            CliError::BlowUp { .. } => 3,
            CliError::Solver(_) => 4,
            CliError::Io { .. } => 5,
        }
    }
}

impl From<kompakton_core::Error> for CliError {
    fn from(e: kompakton_core::Error) -> Self {
        use kompakton_core::Error as E;
        match e {
            E::BlowUp { t, reason } => CliError::BlowUp { t, reason },
            E::InvalidParameter(m) | E::Configuration(m) | E::InsufficientData(m) | E::NotDetected(m) => CliError::Input(m),
            other => CliError::Solver(other.to_string()),
        }
    }
}
