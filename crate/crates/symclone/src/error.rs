//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by construction and verification routines.
///
/// Anything that would silently produce garbage (shape mismatches, broken
/// invariants, blown dimension caps) is reported here instead of panicking,
/// so callers such as the CLI can turn them into clean diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },

    #[error("integer overflow while computing {0}; parameters are beyond desk scale")]
    Overflow(String),

    #[error("invalid cloning parameters: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Kraus set is not trace preserving: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotTracePreserving { defect: f64, tol: f64 },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
}

pub type Result<T> = std::result::Result<T, Error>;
