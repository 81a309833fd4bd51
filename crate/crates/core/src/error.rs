use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a special function or kernel.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    /// Inconsistent combination of scheme, mesh, grids or parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iteration failed to converge or a factorization broke down.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A caller violated a documented precondition (wrong side of the
    /// boundary, non-adjacent panels, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line test bench.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidMesh(_) | Error::Contract(_) | Error::Io(_) => 2,
            Error::Domain(_) | Error::Numerical(_) => 3,
        }
    }
}
