use std::fmt;

use twoatom_core::Error;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID_PARAMETERS: i32 = 2;
pub const EXIT_INVALID_DATA: i32 = 3;
pub const EXIT_MODEL_INAPPLICABLE: i32 = 4;

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn invalid_parameters(message: impl Into<String>) -> Self {
        Self::new(EXIT_INVALID_PARAMETERS, message)
    }

    pub fn invalid_data(message: impl Into<String>) -> Self {
        Self::new(EXIT_INVALID_DATA, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter(_)
            | Error::NegativeTime(_)
            | Error::WindowTooWide { .. }
            | Error::GridTooSmall { .. }
            | Error::DegenerateAntisymmetrization { .. } => EXIT_INVALID_PARAMETERS,
            Error::InvalidData(_) | Error::Csv(_) => EXIT_INVALID_DATA,
            Error::ModelInapplicable(_) => EXIT_MODEL_INAPPLICABLE,
            Error::SolverNonConvergence { .. }
            | Error::IntegrationBlowup { .. }
            | Error::Io(_)
            | Error::Json(_) => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(EXIT_FAILURE, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new(EXIT_FAILURE, e.to_string())
    }
}
