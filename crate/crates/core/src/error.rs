use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("sampler diagnostic: {0}")]
    Diagnostic(String),

    #[error("invalid config at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("malformed file {path}: {message}")]
    Format { path: String, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for this error's category.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Validation { .. } | Error::InvalidState(_) => 2,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::Format { .. } => 3,
            Error::Diagnostic(_) | Error::Degenerate(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
