use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("column {column:?} not found (available: {available})")]
    MissingColumn { column: String, available: String },

    #[error("line {line}: cannot parse {value:?} as a number")]
    UnparsableRow { line: u64, value: String },

    #[error("only {found} observations after the transform; at least {needed} are required")]
    TooShort { found: usize, needed: usize },

    #[error(
        "{len} observations cannot be split into {parts} equal periods (remainder {remainder})"
    )]
    NotDivisible {
        len: usize,
        parts: usize,
        remainder: usize,
    },

    #[error("{0}")]
    Usage(String),

    #[error("{0}: {1}")]
    Csv(String, #[source] csv::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] tailmc::Error),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::MissingColumn { .. } => "missing_column",
            CliError::UnparsableRow { .. } => "unparsable_row",
            CliError::TooShort { .. } => "too_short",
            CliError::NotDivisible { .. } => "not_divisible",
            CliError::Usage(_) => "usage",
            CliError::Csv(..) => "csv",
            CliError::Io { .. } => "io",
            CliError::Core(e) => e.category(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
