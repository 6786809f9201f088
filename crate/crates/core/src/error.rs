use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration key was unknown, malformed or out of range.
    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    /// An argument fell outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver stopped without meeting its tolerance.
    #[error("solver did not converge: {what} (residual {residual:e})")]
    NoConvergence { what: String, residual: f64 },

    #[error("malformed cache file: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}
