//! Front-end error type: wraps library failures and adds config-file
//! diagnostics that carry a line number or the offending field name.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Malformed config text; `line` is 1-based.
    Parse { line: usize, message: String },
    /// Structurally valid config that violates a constraint on one field.
    Field { field: String, message: String },
    Core(oksim_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse { line, message } => {
                write!(f, "config parse error at line {line}: {message}")
            }
            CliError::Field { field, message } => {
                write!(f, "invalid config field `{field}`: {message}")
            }
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<oksim_core::Error> for CliError {
    fn from(e: oksim_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
