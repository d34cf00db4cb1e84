use thiserror::Error;

/// Errors reported by every layer of the toolkit.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {message} (residual {residual:e})")]
    NumericFailure { message: String, residual: f64 },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("continuation failed at t = {last_good_t} (Delta = {last_good_delta}, phi = {last_good_phi}): {message}")]
    ContinuationFailure {
        message: String,
        last_good_t: f64,
        last_good_delta: f64,
        last_good_phi: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>, residual: f64) -> Self {
        Error::NumericFailure {
            message: msg.into(),
            residual,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::NumericFailure { .. } | Error::ContinuationFailure { .. } => 3,
            Error::ResourceLimit(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::invalid(msg)
}
