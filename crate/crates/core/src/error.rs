use thiserror::Error;

use crate::machine::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("machine description failed validation: {}", join_violations(.0))]
    Validation(Vec<Violation>),
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),
    #[error("{what}: {reason}")]
    MissingCalibration { what: String, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("code {code:#x} does not fit a {bits}-bit format")]
    InvalidCode { code: u32, bits: u32 },
    #[error("signal power is zero, SQNR undefined (mse = {mse})")]
    DegenerateSignal { mse: f64 },
    #[error("{0} has no tensor memory")]
    NoTmem(String),
    #[error("intermediate tile needs {needed} bytes, tensor memory holds {capacity}")]
    TmemOverflow { needed: u64, capacity: u64 },
    #[error("unknown decompression format `{0}`")]
    UnknownFormat(String),
    #[error("no calibrated chunk profile for {0} bytes")]
    UnknownChunk(u64),
    #[error("no concurrency in the curve reaches the efficiency threshold")]
    NoPoint,
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
    #[error("no comparable tiles between the two calibrations")]
    EmptyComparison,
    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn missing(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::MissingCalibration {
            what: what.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    /// Short machine-readable tag, stable across releases.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::UnknownMachine(_) => "unknown-machine",
            Error::MissingCalibration { .. } => "missing-calibration",
            Error::Unsupported(_) => "unsupported",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::InvalidCode { .. } => "invalid-code",
            Error::DegenerateSignal { .. } => "degenerate-signal",
            Error::NoTmem(_) => "no-tmem",
            Error::TmemOverflow { .. } => "tmem-overflow",
            Error::UnknownFormat(_) => "unknown-format",
            Error::UnknownChunk(_) => "unknown-chunk",
            Error::NoPoint => "no-point",
            Error::IllConditioned(_) => "ill-conditioned",
            Error::EmptyComparison => "empty-comparison",
            Error::Precondition(_) => "precondition",
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
