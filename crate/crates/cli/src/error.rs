use thiserror::Error;

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Bad invocation: unknown flags or names, missing input files.
pub const EXIT_USAGE: i32 = 2;
/// A configuration or checkpoint failed validation.
pub const EXIT_VALIDATION: i32 = 3;
/// The run itself failed: diverged training, I/O errors while writing.
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error("runtime: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    pub(crate) fn io(what: &str, path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{what} {}: {e}", path.display()))
    }
}

impl From<covert_core::Error> for CliError {
    fn from(e: covert_core::Error) -> Self {
        match e {
            covert_core::Error::Config { .. } => CliError::Validation(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
