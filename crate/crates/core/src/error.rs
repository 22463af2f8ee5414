use thiserror::Error;

/// All failure modes surfaced by the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible scenario: cannot place {requested} vehicles on a {road_length} m road ({detail})")]
    InfeasibleScenario {
        requested: usize,
        road_length: f64,
        detail: String,
    },

    #[error("step called on a finished episode")]
    EpisodeFinished,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid maneuver: target lane {target} is not adjacent to lane {current}")]
    InvalidManeuver { current: usize, target: usize },

    #[error("argument {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("insufficient history: at least {needed} recorded steps required, have {have}")]
    InsufficientHistory { needed: usize, have: usize },

    #[error("tensor shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("recurrent state dimension mismatch: expected {expected}, got {got}")]
    StateMismatch { expected: usize, got: usize },

    #[error("non-finite training signal: {0}")]
    NonFinite(String),

    #[error("checkpoint incompatible: {0}")]
    CheckpointMismatch(String),

    #[error("failed to parse {path} (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: &std::path::Path, err: &serde_json::Error) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
