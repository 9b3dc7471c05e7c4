use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum QpkeError {
    #[error("matrix dimension {dim} exceeds the configured cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("qubit index {index} out of range for {n} qubits")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("width mismatch: expected {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("rejection sampling gave up after {attempts} attempts: {what}")]
    RejectionExhausted { what: &'static str, attempts: usize },

    #[error("public key already consumed")]
    PublicKeyConsumed,

    #[error("scheme mismatch: key is {key}, ciphertext is {ciphertext}")]
    SchemeMismatch { key: String, ciphertext: String },

    #[error("label {0} is not known to this private key")]
    UnknownLabel(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, QpkeError>;
