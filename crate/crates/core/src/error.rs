use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolarError {
    #[error("symbol {symbol} is outside the alphabet [0, {q})")]
    SymbolOutOfRange { symbol: u32, q: u32 },

    #[error("alphabet size {0} is neither a prime nor the GF(4) special case")]
    InvalidAlphabet(u32),

    #[error("block length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("operation requires a binary alphabet, got q = {0}")]
    UnsupportedAlphabet(u32),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("exact enumeration needs 2^{needed:.2} states, budget is 2^{budget}")]
    BudgetExceeded { needed: f64, budget: u32 },

    #[error("rate {0} is outside (0, 1]")]
    InvalidRate(f64),

    #[error("side symbol {0} has zero probability or is out of range")]
    InvalidObservation(u32),

    #[error("decoder protocol violation: expected index {expected}, got {got}")]
    Protocol { expected: usize, got: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fingerprint mismatch: block carries {block}, set has {set}")]
    FingerprintMismatch { block: String, set: String },

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("spectrum method {0} does not provide certified values")]
    Uncertified(String),

    #[error("checksum mismatch after decoding")]
    ChecksumMismatch,
}

pub type Result<T> = std::result::Result<T, PolarError>;
