use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u32),
    #[error("prime {0} exceeds the supported maximum of 251")]
    PrimeTooLarge(u32),
    #[error("p^l = {p}^{level} exceeds the 32-bit index capacity")]
    Capacity { p: u8, level: u32 },
    #[error("digit {digit} at position {position} is not below p = {p}")]
    DigitOutOfRange { digit: u32, position: usize, p: u8 },
    #[error("level mismatch: expected {expected}, got {actual}")]
    LevelMismatch { expected: u32, actual: u32 },
    #[error("operation needs level at least {min}, got {actual}")]
    LevelTooSmall { min: u32, actual: u32 },
    #[error("field configurations differ ({left} vs {right})")]
    FieldMismatch { left: String, right: String },
    #[error("length mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("non-finite intermediate value in layer at level {level}, neuron {neuron}")]
    NonFiniteLayer { level: u32, neuron: usize },
    #[error("norm exponent must be >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("{0} lies outside [0, 1]")]
    OutOfUnitInterval(f64),
    #[error(
        "target coefficient {value} at rank {rank} is not strictly inside (-{bound}, {bound})"
    )]
    TargetTooLarge { rank: usize, value: f64, bound: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty sample set")]
    EmptySamples,
    #[error("learning rate must be positive, got {0}")]
    InvalidLearningRate(f64),
    #[error("basis {basis} requires {required} arithmetic")]
    BasisMismatch {
        basis: &'static str,
        required: &'static str,
    },
    #[error("function returned non-finite value {value} on cell {cell}")]
    NonFiniteSample { cell: String, value: f64 },
    #[error("training diverged: cost became {0} at epoch {1}")]
    Diverged(f64, usize),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line driver: 2 for invalid
    /// configuration or input, 3 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::NonFinite { .. }
            | Error::NonFiniteLayer { .. }
            | Error::NonFiniteSample { .. }
            | Error::Diverged(..) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
