use std::path::PathBuf;

use thiserror::Error;

/// Broad failure classes, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty spectrum: at least one spectral line must be preserved")]
    EmptySpectrum,

    #[error("sensing matrix of {rows}x{cols} entries exceeds the memory budget of {budget} entries")]
    MemoryBudget { rows: usize, cols: usize, budget: usize },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("ill-conditioned {what}: estimated condition number {condition:.3e} exceeds cap {cap:.3e}")]
    IllConditioned {
        what: &'static str,
        condition: f64,
        cap: f64,
    },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("block {start}..{end} is not contained in the current support")]
    BlockNotInSupport { start: usize, end: usize },

    #[error("no candidates: the support already covers every range bin")]
    NoCandidates,

    #[error("target occupancy {target} would leave fewer than one block preserved")]
    OccupancyTooSmall { target: f64 },

    #[error("eligible set holds {available} bins but {requested} scatterers were requested")]
    NotEnoughEligibleBins { available: usize, requested: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed config {path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::IllConditioned { .. } => ErrorKind::Numerical,
            Error::Io { .. } | Error::Csv { .. } => ErrorKind::Io,
            _ => ErrorKind::Config,
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
