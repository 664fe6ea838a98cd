//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any of the toolkit's modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Attempted to invert the zero field element.
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    /// Polynomial division by the zero polynomial.
    #[error("polynomial division by zero")]
    DivideByZeroPoly,

    /// Power-series inverse requested for a polynomial with zero constant term,
    /// or a digest failed a unit check that well-formed digests always pass.
    #[error("polynomial is not invertible modulo z^(t+1)")]
    NotInvertible,

    /// The Euclidean loop exhausted its remainder sequence without the caller's
    /// stopping condition firing.
    #[error("EEA stopping condition never reached")]
    StopNeverReached,

    /// Two vectors (or a vector and a key) disagree on length or alphabet.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Predicate or key parameters violate their invariants.
    #[error("invalid parameters: {0}")]
    ParamsInvalid(String),

    /// Digests or databases produced under incompatible keys.
    #[error("key mismatch: {0}")]
    KeyMismatch(String),

    /// The operation needs the evaluation-point vector, but the database was
    /// stored in split-key mode without it.
    #[error("the a-vector is not present (split-key database); hashing requires the key file")]
    MissingAVector,

    /// Malformed image or vector input.
    #[error("parse error: {0}")]
    ParseError(String),

    /// Malformed or corrupted database/digest file.
    #[error("format error: {0}")]
    FormatError(String),

    /// Brute-force enumeration over a space too large to enumerate.
    #[error("space too large: {0}")]
    TooLarge(String),

    /// A bound that requires an even alphabet was asked for an odd one.
    #[error("alphabet size must be even")]
    OddAlphabet,

    /// List-size bound requires t > q - 1.
    #[error("threshold too small: need t > q - 1")]
    ThresholdTooSmall,

    /// Block plan cannot be realized for this vector length.
    #[error("bad block count: {0}")]
    BadBlockCount(String),

    /// The trial harness could not realize the requested one-sided distances.
    #[error("construction failure: {0}")]
    ConstructionFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
