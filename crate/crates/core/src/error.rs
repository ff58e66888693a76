//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by state manipulation, protocol configuration and
/// report construction. Protocol aborts are not errors; they are carried
/// in [`crate::protocol::Verdict::Aborted`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown ket label `{0}` (expected one of 0, 1, +, -)")]
    UnknownKetLabel(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("qubit index {qubit} out of range for {num_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("qubit indices must be distinct (index {0} repeats)")]
    DuplicateQubit(usize),

    #[error("state vector is not normalized (squared norm {norm_sq})")]
    NotNormalized { norm_sq: f64 },

    #[error("amplitudes must be finite")]
    NonFiniteAmplitude,

    #[error("matrix is not unitary (max |U\u{2020}U - I| entry = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("not a valid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
