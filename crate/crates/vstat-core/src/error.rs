//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by kernel evaluation, expansion construction, statistic
/// computation, and experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or has the wrong shape.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A config field failed validation. `field` names the offending key.
    #[error("validation error in field `{field}`: {message}")]
    Validation { field: String, message: String },

    /// A numeric routine failed to converge. `residual` is the last error
    /// estimate observed before giving up.
    #[error("numeric error: {message} (residual {residual:.3e})")]
    Numeric { message: String, residual: f64 },

    /// A cost guard tripped (tuple count, grid size, ...).
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// The requested operation is not defined for this input.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// All sign-measure masses vanish; the kernel has no spectral content.
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn validation(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: msg.into(),
        }
    }

    /// Exit code the CLI maps this error to: 1 for user/validation errors,
    /// 2 for numeric or resource failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Validation { .. } | Error::Json(_) => 1,
            Error::Numeric { .. }
            | Error::Resource(_)
            | Error::Unsupported(_)
            | Error::DegenerateKernel(_)
            | Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
