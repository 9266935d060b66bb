use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] isocap_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(line: usize, reason: impl Into<String>) -> Self {
        LabError::Format {
            line,
            reason: reason.into(),
        }
    }

    /// Whether the error comes from malformed user input rather than a failed computation.
    pub fn is_input_error(&self) -> bool {
        matches!(self, LabError::Format { .. } | LabError::Config(_))
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
