//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors raised by sequence construction, objective evaluation,
/// optimization and verification.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not Hermitian: max deviation {defect:.3e} exceeds {tol:.3e}")]
    NonHermitian { defect: f64, tol: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("state is not normalized: norm {norm}")]
    NotNormalized { norm: f64 },

    #[error("{0} qubits exceeds the supported maximum of 12")]
    TooManyQubits(usize),

    #[error("pulse kind {0} does not generate a unitary")]
    NotUnitaryKind(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("unknown code name `{0}`")]
    UnknownCode(String),

    #[error("error-to-outcome map is not injective")]
    NonInjectiveOutcomeMap,

    #[error("auxiliary register too small: {outcomes} outcomes needed, {capacity} available")]
    AuxTooSmall { outcomes: usize, capacity: usize },

    #[error("logical gate matrix is not unitary")]
    NonUnitaryGate,

    #[error("sequence contains measurement or reset inside a unitary segment")]
    MeasurementInUnitarySegment,

    #[error("evaluation caches are stale; refresh the context first")]
    StaleCache,

    #[error("pulse index {index} out of range for sequence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("pulse at index {0} is a fixed slot and cannot be updated")]
    FixedSlot(usize),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("input sequence does not attain the objective maximum (gap {gap:.3e})")]
    InputNotOptimal { gap: f64 },

    #[error("reset on qubit {qubit} while it is entangled (purity {purity})")]
    ResetOnEntangledQubit { qubit: usize, purity: f64 },

    #[error("sequence contains non-unitary operations")]
    NonUnitarySequence,

    #[error("parse error at line {line}: {msg}")]
    ParseError { line: usize, msg: String },

    #[error("contract mismatch: {0}")]
    ContractMismatch(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
