use thiserror::Error;

/// Errors raised by the tracking toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotError {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid detection: {0}")]
    InvalidDetection(String),
    #[error("empty calibration set: {0}")]
    EmptyCalibration(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("filter degenerate: innovation covariance condition number {0:e}")]
    FilterDegenerate(f64),
    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("frame {got} received after frame {last}")]
    Sequencing { last: u64, got: u64 },
    #[error("metric undefined: {0}")]
    Undefined(String),
    #[error("no true positives at IoU {0}")]
    NoTruePositives(f64),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = MotError> = std::result::Result<T, E>;
