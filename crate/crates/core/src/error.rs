use thiserror::Error;

/// Errors raised by validation, the solvers and the oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },

    #[error("entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },

    #[error("entries sum to {sum}, not 1 (tolerance {tol})")]
    SumNotOne { sum: f64, tol: f64 },

    #[error("divergence is infinite: p[{index}] > 0 while q[{index}] = 0")]
    SupportMismatch { index: usize },

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("normalizer underflowed for source symbol {row}")]
    DegenerateDenominator { row: usize },

    #[error("no slope in [0, {zeta_cap}] reaches distortion {delta} (closest {closest})")]
    BisectionFailure { delta: f64, zeta_cap: f64, closest: f64 },

    #[error("alphabet of size {size} exceeds the brute-force limit {limit}")]
    AlphabetTooLarge { size: usize, limit: usize },

    #[error("all density masses underflow on the discretization grid")]
    DegenerateDensity,

    #[error("no distortion matrix supplied and the built-in construction is disabled")]
    MissingDistortion,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
