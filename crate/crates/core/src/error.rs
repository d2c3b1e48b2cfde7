use thiserror::Error;

/// Failures reported by the toolkit.
///
/// The two variants map onto the command-line exit codes 1 and 2.
#[derive(Debug, Error)]
pub enum Error {
    /// Input rejected before any numerical work (bad grid, malformed file,
    /// violated precondition).
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical procedure did not meet its own accuracy contract.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Io(_) => 1,
            Error::Numerical(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
