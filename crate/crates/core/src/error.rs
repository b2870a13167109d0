use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain: {0}")]
    Domain(String),

    /// A configuration's length does not match the chain it is applied to.
    #[error("configuration has {got} bits but the chain has {expected} devices")]
    ConfigLength { expected: usize, got: usize },

    /// Exhaustive enumeration was requested above the configured cap.
    #[error("enumeration over {n} devices exceeds the cap of {cap}; use sampling / local search instead")]
    EnumerationCap { n: usize, cap: usize },

    /// Band extraction could not identify every device unambiguously.
    #[error("calibration failure: {0}")]
    Calibration(String),

    /// No pulse ordering programs the requested target.
    #[error("unreachable target: {0}")]
    UnreachableTarget(String),

    /// A measured spectrum could not be matched to a unique configuration.
    #[error("readout: {0}")]
    Readout(String),

    /// Feature vectors that cannot be turned into a waveform.
    #[error("encoding: {0}")]
    Encoding(String),

    /// Malformed input file content.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
