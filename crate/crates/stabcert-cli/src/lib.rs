//! Library half of the `stabcert` command-line tool, exposed so integration
//! tests and the acceptance suite can drive full pipelines in-process.

pub mod config;
pub mod manifest;
pub mod plot;
pub mod runner;
pub mod sweep;

use std::fmt;

/// Exit-code semantics: validation problems are ordinary failures (exit 1);
/// a certified instance breaching its envelope is a mathematical-invariant
/// violation (exit 2) so CI can separate bugs from bad inputs.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Invariant(String),
    Io(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invariant(_) => 2,
            CliError::Validation(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Invariant(m) => write!(f, "invariant violation: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<stabcert::Error> for CliError {
    fn from(e: stabcert::Error) -> Self {
        match e {
            stabcert::Error::InvariantViolation(m) => CliError::Invariant(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
