use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate metric at node ({i}, {j}): det g = {det:e}")]
    DegenerateMetric { i: usize, j: usize, det: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field shape mismatch: expected {expected} nodes, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid subsolution: u = {value:e} at node ({i}, {j})")]
    InvalidSubsolution { i: usize, j: usize, value: f64 },

    #[error("invalid cycle: {0}")]
    InvalidCycle(String),

    #[error("probe `{label}` pairs to {pairing:e} with its cycle; the class is not of infinite order")]
    ProbeNotInfiniteOrder { label: String, pairing: f64 },

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("oracle inapplicable: {0}")]
    OracleInapplicable(String),

    #[error("unreliable oracle: {0}")]
    UnreliableOracle(String),

    #[error("incomplete trajectory: {0}")]
    IncompleteTrajectory(String),

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("radius {radius} lies beyond the interior of the truncated domain (limit {limit})")]
    RadiusBeyondBuffer { radius: f64, limit: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("scenario has {} error(s):\n  {}", .0.len(), .0.join("\n  "))]
    Scenario(Vec<String>),

    #[error("malformed run directory {path}: {reason}")]
    RunDir { path: PathBuf, reason: String },

    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
