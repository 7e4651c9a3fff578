use std::path::PathBuf;

use softarm_core::{AcquisitionError, ExperimentError, PlantError, TableError, VisionError};
use thiserror::Error;

/// Failures reading or writing configs, datasets, schedules and reports.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}:{line}: field `{field}`: {message}")]
    Field {
        path: PathBuf,
        line: u64,
        field: String,
        message: String,
    },
    #[error("line {line}: {message}")]
    Schedule { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid dataset: {0}")]
    Dataset(#[from] AcquisitionError),
    #[error(transparent)]
    Vision(#[from] VisionError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

impl FormatError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

/// Everything a subcommand can fail with, grouped by exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Acquisition(#[from] AcquisitionError),
    #[error("invariant check failed: {}", .0.join("; "))]
    Assertion(Vec<String>),
}

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Format(FormatError::Io { .. }) => EXIT_OTHER,
            RunError::Format(_) => EXIT_PARSE,
            RunError::Assertion(_) => EXIT_ASSERTION,
            _ => EXIT_OTHER,
        }
    }
}
