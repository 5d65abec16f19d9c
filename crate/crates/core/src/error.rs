//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad parameter values, malformed schedules,
    /// inconsistent experiment specs. CLI exit code 2.
    #[error("configuration error: {0}")]
    Config(String),

    /// Numerical failure: non-finite state, quadrature that cannot reach
    /// its tolerance, degenerate inputs. CLI exit code 3.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Social information at the requested lag is not observable yet
    /// (t - tau <= 0 or evicted from the ring buffer). Callers fall back
    /// to individual learning.
    #[error("social information not yet observable at t={t}, tau={tau}")]
    NotYetObservable { t: u32, tau: u32 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
