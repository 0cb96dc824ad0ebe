use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Compute {
        context: String,
        #[source]
        source: steerkit_core::Error,
    },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("validation failed: max relative discrepancy {max_relative:e} exceeds {tolerance:e}")]
    ValidationFailed { max_relative: f64, tolerance: f64 },
}

/// Machine-readable form written to stderr on failure.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn compute(context: impl Into<String>) -> impl FnOnce(steerkit_core::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Compute { context, source }
    }

    pub fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Compute { .. } => "ComputeError",
            CliError::Io { .. } => "IoError",
            CliError::ValidationFailed { .. } => "ValidationFailed",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute { .. } => 3,
            CliError::Io { .. } => 4,
            CliError::ValidationFailed { .. } => 5,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord { error: self.kind(), message: self.to_string(), exit_code: self.exit_code() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
