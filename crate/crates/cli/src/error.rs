use thiserror::Error;

/// Pipeline errors, each mapped to a process exit code:
/// 0 pass, 1 threshold failure, 2 usage error, 3 runtime error.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("threshold failure:\n{}", failing.join("\n"))]
    Thresholds { failing: Vec<String> },

    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Thresholds { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Stage { .. } => 3,
        }
    }

    pub fn stage(stage: &'static str, err: impl std::fmt::Display) -> Self {
        CliError::Stage {
            stage,
            message: err.to_string(),
        }
    }
}
