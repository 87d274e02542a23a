use roughlab::LabError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lab(#[from] LabError),
    /// Bad flags, config files or environment.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    /// A golden comparison failed or a fixture is missing.
    #[error("{0}")]
    Golden(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lab(e) => e.exit_code(),
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Golden(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Lab(LabError::Validation(_)) | CliError::Usage(_) => "validation",
            CliError::Lab(LabError::NumericalGuard(_)) => "numerical_guard",
            CliError::Io(_) => "io",
            CliError::Golden(_) => "golden",
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_line(&self) -> String {
        let reason = match self {
            CliError::Lab(LabError::Validation(m) | LabError::NumericalGuard(m)) => m.clone(),
            other => other.to_string(),
        };
        let reason = reason.split_whitespace().collect::<Vec<_>>().join(" ");
        serde_json::json!({ "error": self.kind(), "exit": self.exit_code(), "reason": reason }).to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn io_err(what: impl std::fmt::Display, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{what}: {e}"))
}
