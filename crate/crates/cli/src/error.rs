use dwset::DwError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed spec, bad parameter or unknown theorem id.
    #[error("{0}")]
    Parse(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] DwError),
    #[error("cannot write {path}: {reason}")]
    Output { path: String, reason: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Output { .. } => 5,
        }
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        CliError::Parse(msg.into())
    }
}
