//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the emulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A value does not fit the requested fixed-point format.
    #[error("value {value} outside representable range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    /// A fixed-point operation produced a raw word that does not fit its
    /// declared bit width. Overflow is always reported, never wrapped.
    #[error("fixed-point overflow: raw {raw} does not fit {bits} bits")]
    Overflow { raw: i128, bits: u32 },

    /// Two operands have incompatible shapes or fixed-point formats.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Vector or matrix dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A basis or tensor dimension is invalid (zero extent).
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// Requested truncation rank exceeds the basis dimension.
    #[error("rank {rank} exceeds dimension {dim}")]
    RankTooLarge { rank: usize, dim: usize },

    /// An input lies outside the domain of an arithmetic routine.
    #[error("domain error: {0}")]
    DomainError(String),

    /// A state collapsed to (numerically) zero where a unit vector is required.
    #[error("degenerate state: {0}")]
    DegenerateState(String),

    /// An all-zero vector was supplied where a nonzero one is required.
    #[error("zero vector: {0}")]
    ZeroVector(String),

    /// An estimator precision parameter is outside (0, 1).
    #[error("invalid precision {0}; must lie in (0, 1)")]
    InvalidPrecision(f64),

    /// The design matrix of a least-squares fit is rank deficient.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Malformed configuration or data file.
    #[error("config error: {0}")]
    Config(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
