//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the library and the CLI commands.
///
/// The CLI maps each variant to a process exit code: `Config` to 2,
/// `Data` to 3, `Numerical` to 4. `Io` is reported as a config error
/// when it concerns paths the user supplied.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or parameters (bad `n_res`, parity, ranges).
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or inconsistent data (dimension mismatch, bad file contents).
    #[error("data error: {0}")]
    Data(String),

    /// A numerical procedure failed (non-finite values, no convergence).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
