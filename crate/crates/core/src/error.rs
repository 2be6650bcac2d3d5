use thiserror::Error;

/// Errors raised by the modelling, quadrature and optimization layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The typical user has no serving base station in its operator network.
    #[error("no coverage: operator {mno} has no base station in the sampling window")]
    NoCoverage { mno: usize },

    #[error("no coverage after {retries} resampling attempts")]
    CoverageRetriesExhausted { retries: u32 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A configuration key failed to parse or violated an invariant.
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
