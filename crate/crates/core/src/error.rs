use thiserror::Error;

/// Errors raised by the decoding engine and its supporting modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown fault location: operation {op}, target {target}")]
    UnknownLocation { op: usize, target: usize },

    #[error("mechanism {index} cannot be decomposed into graphlike edges: detectors {detectors:?}")]
    Decomposition { index: usize, detectors: Vec<u32> },

    #[error("edge {0} has no core assignment")]
    Partition(usize),

    #[error("window index {index} out of range (plan has {windows} windows)")]
    WindowIndex { index: usize, windows: usize },

    #[error("detection event on unknown vertex {0}")]
    UnknownVertex(u32),

    #[error("no correction satisfies the given detection events")]
    NoSolution,

    #[error("graph too large for exhaustive search: {edges} edges (limit {limit})")]
    TooLarge { edges: usize, limit: usize },

    #[error("windows {left} and {right} do not overlap")]
    NoOverlap { left: usize, right: usize },

    #[error("missing prediction for shot {shot}, window {window}")]
    MissingPrediction { shot: u64, window: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
