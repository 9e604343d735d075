use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive integrator could not make progress.
    #[error("integration failed at tau = {tau}: {reason}")]
    Integration { tau: f64, reason: String },

    /// The integrated result violates an invariant it must satisfy analytically.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Integration { .. } | Error::Accuracy(_))
    }
}
