use thiserror::Error;

/// Errors raised across the library.
///
/// Each variant corresponds to one failure family; the CLI maps them onto
/// its exit codes (configuration errors exit 2, graph errors exit 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("spec error: {0}")]
    Spec(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}
