use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("PARSE_ERROR at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("SCHEMA_VIOLATION at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("VALIDATION: {0}")]
    Validation(String),
    #[error("INSUFFICIENT_REPLICATES: {0} replicates given, at least 10 required")]
    InsufficientReplicates(usize),
    #[error("{}: {0}", .0.code())]
    Model(#[from] metapop::Error),
    #[error("IO_ERROR: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn code(&self) -> &'static str {
        match self {
            HarnessError::Parse { .. } => "PARSE_ERROR",
            HarnessError::Schema { .. } => "SCHEMA_VIOLATION",
            HarnessError::Validation(_) => "VALIDATION",
            HarnessError::InsufficientReplicates(_) => "INSUFFICIENT_REPLICATES",
            HarnessError::Model(e) => e.code(),
            HarnessError::Io(_) => "IO_ERROR",
        }
    }

    /// Process exit code: 3 for numerical failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Model(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
