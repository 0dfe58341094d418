use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid truncation window ({lower}, {upper}): lower bound must be below upper bound")]
    InvalidWindow { lower: f64, upper: f64 },

    #[error("invalid belief interval [{lower}, {upper}]: need -1 <= lower < upper <= 1")]
    InvalidBelief { lower: f64, upper: f64 },

    #[error("non-finite input to {op}: {value}")]
    NonFinite { op: &'static str, value: f64 },

    #[error("context x must be nonzero for {op}")]
    ZeroContext { op: &'static str },

    #[error("width must lie in (0, 2], got {0}")]
    InvalidWidth(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invariant violated in trial {trial}, round {round}: {what}")]
    Invariant {
        trial: u64,
        round: u64,
        what: String,
    },

    #[error("trial {0} carries no per-round records; rerun with full records")]
    MissingRecords(u64),
}

pub type Result<T> = std::result::Result<T, Error>;
