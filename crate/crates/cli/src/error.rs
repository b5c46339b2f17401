use std::io;
use std::path::PathBuf;

use rkhs_core::rhs_expr::ParseError;
use rkhs_core::RkhsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config file contents, failed validation.
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    /// Expression syntax error; `source_text` is echoed with a caret.
    #[error("{field}: {error}\n  {source_text}\n  {caret:>width$}", caret = "^", width = error.offset + 1)]
    Expression {
        field: String,
        source_text: String,
        error: ParseError,
    },
    #[error("{0}")]
    Core(#[from] RkhsError),
}

impl CliError {
    /// 2 config/argument, 3 parse, 4 numeric, 5 domain.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Expression { .. } => 3,
            CliError::Core(e) => match e {
                RkhsError::Argument(_) | RkhsError::Singularity(_) => 2,
                RkhsError::Parse(_) => 3,
                RkhsError::Numeric(_) | RkhsError::Tolerance { .. } => 4,
                RkhsError::Domain(_) => 5,
            },
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("writing CSV: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("writing JSON: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
