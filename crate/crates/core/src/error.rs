//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by channel synthesis, codebook construction, quantization and
/// simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A configuration value is outside its valid domain.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Vector length does not match the array geometry.
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    /// An enumeration would exceed the configured cap.
    #[error("enumeration of {required} candidates exceeds the cap of {cap}")]
    TooLarge { required: u128, cap: u128 },
    /// A detection input contains a zero-modulus entry, whose phase is undefined.
    #[error("entry {index} has zero modulus; its phase is undefined")]
    ZeroEntry { index: usize },
    /// A detection input contains NaN or infinite values.
    #[error("entry {index} is not finite")]
    NonFinite { index: usize },
    /// The channel ensemble has no power, so correlation is undefined.
    #[error("degenerate channel ensemble: {0}")]
    DegenerateEnsemble(String),
    /// Bit stream cannot be framed into symbols.
    #[error("bit stream of length {0} cannot be split into QPSK pairs")]
    Framing(usize),
    /// Coherent detection against a zero effective channel.
    #[error("effective channel is zero")]
    ZeroChannel,
}

pub type Result<T> = std::result::Result<T, Error>;
