use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures of a harness run, grouped by exit code.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("solver: {0}")]
    Solver(#[from] irsmec::Error),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 2 configuration, 3 I/O, 4 solver failure.
    pub fn exit_code(&self) -> i32 {
        use irsmec::Error as E;
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Io { .. } | HarnessError::Csv(_) => 3,
            HarnessError::Solver(e) => match e {
                E::Geometry(_) | E::Profile(_) | E::Dimension(_) => 2,
                E::Io(_) | E::Parse(_) => 3,
                _ => 4,
            },
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
