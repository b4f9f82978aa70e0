use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}: {1}")]
    File(String, String),
    #[error("invalid solution file: {0}")]
    SolutionFormat(String),
    #[error(transparent)]
    Core(#[from] vrp_core::CoreError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl IoError {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        IoError::Parse {
            line,
            msg: msg.into(),
        }
    }
}
