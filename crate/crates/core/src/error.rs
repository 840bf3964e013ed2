use std::path::PathBuf;

use thiserror::Error;

/// Error type shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("point ({x:.3}, {y:.3}) lies outside the arena; trace data is corrupt")]
    PointOutsideArena { x: f64, y: f64 },

    #[error("schema error in {path}: {message}")]
    Schema { path: PathBuf, message: String },

    #[error("output directory {0} already exists (pass --force to overwrite)")]
    OutputExists(PathBuf),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("undefined parameter: {0}")]
    UndefinedParameter(String),

    #[error("simulator invariant violated: {0}")]
    SimulatorBug(String),

    #[error("model invariant violated: {0}")]
    ModelInvariant(String),

    #[error("parse error at {line}:{column}: {message} (expected {expected})")]
    Parse {
        line: usize,
        column: usize,
        message: String,
        expected: String,
    },

    #[error("unresolved names in property: {0:?}")]
    Unresolved(Vec<String>),

    #[error("unknown reward structure: {0}")]
    UnknownRewardStructure(String),

    #[error("numerical non-convergence: achieved tolerance {achieved:e}, requested {requested:e}")]
    NonConvergence { achieved: f64, requested: f64 },

    #[error("sweep variable {0} unused in property")]
    SweepVariableUnused(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config file error: {0}")]
    Toml(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn schema(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
