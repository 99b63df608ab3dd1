use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid device parameters: {0}")]
    InvalidDevice(String),

    #[error("dispersion sigma {sigma} too large: no valid device after {attempts} draws")]
    DispersionTooLarge { sigma: f64, attempts: usize },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("index {index} out of range for {context} of size {len}")]
    OutOfRange {
        context: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("value {value} outside [{min}, {max}] in {context}")]
    ValueOutOfRange {
        context: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("operation requires binary (spiking) data but the sample is analog")]
    NotBinary,

    #[error("system is singular without regularization; use a positive ridge parameter")]
    SingularSystem,

    #[error("convergence trace has no checkpoints")]
    EmptyTrace,

    #[error("bad magic number in {context}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        context: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("bad header in {context}: {detail}")]
    BadHeader {
        context: &'static str,
        detail: String,
    },

    #[error("truncated {context}: needed {needed} bytes, {available} available")]
    Truncated {
        context: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("unsupported {context} version {found}")]
    UnsupportedVersion { context: &'static str, found: u32 },

    #[error(transparent)]
    Io(#[from] io::Error),
}
