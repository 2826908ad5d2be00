use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error at {path}: {message}")]
    Validation { path: String, message: String },

    #[error("unknown configuration keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("state error: {0}")]
    State(String),

    #[error("time {time} fs outside tabulated range [-{limit}, {limit}] fs")]
    Range { time: f64, limit: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn validation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation { .. } | Error::UnknownKeys(_) | Error::Json(_) => 2,
            Error::Numeric(_) | Error::Range { .. } | Error::State(_) => 3,
            Error::Resource(_) => 4,
            Error::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "validation",
            Error::UnknownKeys(_) => "unknown_keys",
            Error::Numeric(_) => "numeric",
            Error::Resource(_) => "resource",
            Error::State(_) => "state",
            Error::Range { .. } => "range",
            Error::Io(_) => "io",
            Error::Json(_) => "config_syntax",
        }
    }
}
