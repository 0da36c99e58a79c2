use kinetic::KineticError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing key {0}")]
    MissingKey(String),

    #[error("unknown key {0}")]
    UnknownKey(String),

    #[error("{key} {constraint}")]
    Invalid { key: String, constraint: String },

    #[error("scenario syntax: {0}")]
    Syntax(String),

    #[error(transparent)]
    Kinetic(#[from] KineticError),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn invalid(key: &str, constraint: impl Into<String>) -> Self {
        CliError::Invalid {
            key: key.to_string(),
            constraint: constraint.into(),
        }
    }

    /// 0 ok, 1 i/o, 2 validation, 3 numerical horizon.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Kinetic(KineticError::Io(_)) => 1,
            CliError::Kinetic(e) if e.is_horizon() => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
