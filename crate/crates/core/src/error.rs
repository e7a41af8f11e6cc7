use thiserror::Error;

use crate::convex::SolverCertificate;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 8")]
    InvalidGrid(usize),

    #[error("exponent {0} outside the supported range")]
    InvalidExponent(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconsistent exponents: 1/{p} != 1/{r} + 1/{s}")]
    InconsistentExponents { p: f64, r: f64, s: f64 },

    #[error("vanishing modulus: weight sample {index} is {value}")]
    VanishingModulus { index: usize, value: f64 },

    #[error("function is identically zero")]
    ZeroFunction,

    #[error("element is not in the required subspace (residual {0:e})")]
    NotInSubspace(f64),

    #[error("matrix is numerically singular (smallest/largest singular value {0:e})")]
    SingularMatrix(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Cholesky factorization failed: {0}")]
    Cholesky(&'static str),

    #[error("spectral factorization did not converge (residual {0:e})")]
    SpectralFactorization(f64),

    #[error("solver stopped after {} iterations with gap {:e}", .0.iterations, .0.gap)]
    NonConvergence(Box<SolverCertificate>),

    #[error("instance too large for the brute-force oracle: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
