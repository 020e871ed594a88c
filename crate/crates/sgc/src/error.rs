//! Error taxonomy shared by the library and the CLI.
//!
//! Three failure classes map onto the CLI exit codes: usage errors (bad
//! arguments or missing files, exit 1), data errors (malformed or
//! inconsistent inputs, exit 2), and numerical failures (solver
//! non-convergence, non-finite values, exit 3).

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid arguments, out-of-range parameters, missing files.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// Numerical failure: non-convergence, non-finite intermediate values.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Underlying I/O failure (treated as a usage error at the CLI).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Convenience constructor for usage errors.
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Convenience constructor for data errors.
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// Convenience constructor for numerical errors.
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Io(_) => 1,
            Error::Data(_) => 2,
            Error::Numerical(_) => 3,
        }
    }
}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
