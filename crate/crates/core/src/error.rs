use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sample must contain at least one finite value")]
    EmptySample,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("no positive values remain after the tail transform")]
    EmptyResult,

    #[error("need at least {needed} positive values for k = {k}, found {found}")]
    NotEnoughPositive {
        k: usize,
        needed: usize,
        found: usize,
    },

    #[error("the {count} largest values are all equal; the Hill estimate is infinite")]
    DegenerateTail { count: usize },

    #[error("at k = {k}: {source}")]
    AtK {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("every replication failed for alpha0 = {alpha0}")]
    GridDegenerate { alpha0: f64 },

    #[error("sample length {sample} does not match grid length {grid}")]
    LengthMismatch { sample: usize, grid: usize },

    #[error("unsupported grid format version {found} (expected {expected})")]
    FormatVersionMismatch { found: String, expected: u32 },

    #[error("grid checksum mismatch (file truncated or modified)")]
    ChecksumMismatch,

    #[error("grid file is inconsistent with its header: {0}")]
    SpecIncompatible(String),

    #[error("all {0} replications failed")]
    AllReplicationsFailed(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category, used by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Domain(_) => "domain",
            Error::EmptySample => "empty_sample",
            Error::NonFinite { .. } => "non_finite",
            Error::EmptyResult => "empty_result",
            Error::NotEnoughPositive { .. } => "not_enough_positive",
            Error::DegenerateTail { .. } => "degenerate_tail",
            Error::AtK { source, .. } => source.category(),
            Error::GridDegenerate { .. } => "grid_degenerate",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::FormatVersionMismatch { .. } => "format_version_mismatch",
            Error::ChecksumMismatch => "checksum_mismatch",
            Error::SpecIncompatible(_) => "spec_incompatible",
            Error::AllReplicationsFailed(_) => "all_replications_failed",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// The underlying error with any `AtK` annotation removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtK { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
