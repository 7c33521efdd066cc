use std::process::ExitCode;

use periomega::cascade::CascadeError;
use periomega::interval::IntervalError;
use periomega::periodic::SearchError;
use periomega::recurrence::RecurrenceError;
use periomega::MapError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration or a flag violates a precondition.
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// A valid request whose numerics did not succeed.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Io(_) => ExitCode::from(1),
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(3),
        }
    }
}

pub fn invalid<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Validation(msg.into()))
}

impl From<MapError> for CliError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::InvalidInput(_) => CliError::Validation(e.to_string()),
            MapError::Escaped { .. } | MapError::NotInvertible(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<IntervalError> for CliError {
    fn from(e: IntervalError) -> Self {
        match e {
            IntervalError::InvalidInput(_) => CliError::Validation(e.to_string()),
            IntervalError::Map(m) => m.into(),
        }
    }
}

impl From<CascadeError> for CliError {
    fn from(e: CascadeError) -> Self {
        match e {
            CascadeError::InvalidInput(_) => CliError::Validation(e.to_string()),
            CascadeError::Map(m) => m.into(),
            CascadeError::Bracket { .. } | CascadeError::Refinement { .. } | CascadeError::NoCycle { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

impl From<RecurrenceError> for CliError {
    fn from(e: RecurrenceError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
