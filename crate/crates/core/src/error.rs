use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("molecule text is empty")]
    EmptyMolecule,

    #[error("molecule text {0:?} contains a tab, newline or other control character")]
    InvalidMolecule(String),

    #[error("building-block set is empty")]
    EmptyBuildingBlockSet,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: beta {beta} outside (0, 1]")]
    BetaOutOfRange { path: String, line: usize, beta: f64 },

    #[error("gene value {0} outside [0, 1]")]
    GeneOutOfRange(f64),

    #[error("degenerate configuration: {0}")]
    DegenerateConfig(String),

    #[error("worker count must be at least 1")]
    ZeroWorkers,

    #[error("search space of {size} points exceeds the cap of {cap}")]
    SpaceTooLarge { size: u128, cap: u128 },

    #[error("invalid world spec: {0}")]
    InvalidWorldSpec(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
