use thiserror::Error;

/// Failures of a run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("property suite failed: {0}")]
    PropertyFailure(String),
    #[error(transparent)]
    Core(#[from] pqsp_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NotConverged(_) => 2,
            CliError::Core(pqsp_core::Error::OuterNotConverged { .. } | pqsp_core::Error::InnerNotConverged { .. }) => 2,
            CliError::PropertyFailure(_) => 3,
            _ => 1,
        }
    }
}
