use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("no root of the stationarity condition in [0, {n_max}]")]
    NoRootInBracket { n_max: f64 },

    #[error("numerical failure at site {site}, t = {t}: {reason}")]
    Numerical { site: usize, t: f64, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParam { name, reason: reason.into() }
}
