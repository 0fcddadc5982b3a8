//! Crate-wide error type.

use std::fmt;

/// Errors produced by network loading, transformation, demand generation,
/// assignment and report emission.
#[derive(Debug)]
pub enum Error {
    /// Malformed input record (CSV/JSON/TOML). `line` is 1-based where known.
    Parse { line: usize, message: String },
    /// Structurally invalid input (dangling endpoints, bad ranges, ...).
    Validation(String),
    /// AV-lane transformation rejected a link.
    Transform(String),
    /// Argument outside its mathematical domain.
    Domain(String),
    /// No admissible route for an agent.
    Routing { agent: Option<u64>, message: String },
    /// Invalid scenario/sweep configuration.
    Config(String),
    /// Assignments built from different populations were combined.
    FingerprintMismatch { expected: String, actual: String },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, message } => write!(f, "parse error at record {line}: {message}"),
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Transform(msg) => write!(f, "transform error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Routing { agent: Some(id), message } => {
                write!(f, "routing error for agent {id}: {message}")
            }
            Error::Routing { agent: None, message } => write!(f, "routing error: {message}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::FingerprintMismatch { expected, actual } => write!(
                f,
                "population fingerprint mismatch: {expected} vs {actual}"
            ),
            Error::Io(e) => write!(f, "i/o error: {e}"),
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

impl Error {
    /// Exit-code class used by the CLI: 2 for input validation, 3 for runtime.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation(_)
                | Error::Domain(_)
                | Error::Config(_)
                | Error::Transform(_)
        )
    }
}
