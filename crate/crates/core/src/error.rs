//! Error type shared by all simulator modules.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// A constructor or operation was handed a value outside its domain.
    /// `name` identifies the offending field or argument.
    InvalidParameter { name: &'static str, message: String },
    /// An iterative linear solve failed to reach its tolerance.
    SolverStalled {
        context: &'static str,
        residual: f64,
        iterations: usize,
    },
    /// A non-finite value appeared in the evolving field.
    NanDetected { step: usize },
    /// A geometric shape failed validation (overlap, self-intersection, ...).
    InvalidShape(String),
    /// A field dump could not be parsed. `line` is 1-based.
    ParseField { line: usize, message: String },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, message } => {
                write!(f, "invalid parameter `{name}`: {message}")
            }
            Error::SolverStalled {
                context,
                residual,
                iterations,
            } => write!(
                f,
                "{context}: solver stalled at relative residual {residual:.3e} after {iterations} iterations"
            ),
            Error::NanDetected { step } => {
                write!(f, "non-finite value detected at step {step}")
            }
            Error::InvalidShape(msg) => write!(f, "invalid shape: {msg}"),
            Error::ParseField { line, message } => {
                write!(f, "field dump, line {line}: {message}")
            }
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
