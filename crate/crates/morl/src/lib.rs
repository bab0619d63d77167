//! Experiment harness for `morl-core`: map and config files, seeded batch
//! runs, CSV traces, and run comparison.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod mapfile;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{origin}:{line}: {message}")]
    Parse { origin: String, line: usize, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Core(#[from] morl_core::Error),
    #[error("seed {seed}: {source}")]
    Run { seed: u64, source: morl_core::Error },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
