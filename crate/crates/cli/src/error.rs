use holo_core::Error as CoreError;
use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const VALIDATION: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => exit::IO,
            CliError::Json(_) => exit::PARSE,
            CliError::Usage(_) => exit::VALIDATION,
            CliError::Core(e) => match e {
                CoreError::Io(_) => exit::IO,
                CoreError::Parse { .. } | CoreError::Format(_) | CoreError::Json(_) => exit::PARSE,
                CoreError::NonFinite(_)
                | CoreError::DegenerateScale(_)
                | CoreError::DegenerateInput(_)
                | CoreError::UndefinedCosine => exit::NUMERIC,
                _ => exit::VALIDATION,
            },
        }
    }
}
