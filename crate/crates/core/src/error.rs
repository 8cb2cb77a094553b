use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by the numeric core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes are incompatible for the named operation.
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    /// Data length does not match the product of the shape.
    Length { expected: usize, got: usize },
    /// A NaN or infinity appeared at an operation boundary.
    NonFinite { op: &'static str },
    /// API misuse, e.g. backward through an untracked value.
    Usage(String),
    /// Invalid configuration value (tau, p, learning rate, layer dims, ...).
    Config(String),
    /// Malformed input data (label out of range, non-binary target, ...).
    Data(String),
    /// Training stopped because a loss or gradient went non-finite.
    Diverged {
        epoch: usize,
        batch: usize,
        op: &'static str,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape { op, left, right } => {
                write!(f, "{op}: incompatible shapes {left:?} and {right:?}")
            }
            Error::Length { expected, got } => {
                write!(f, "data length {got} does not match shape size {expected}")
            }
            Error::NonFinite { op } => write!(f, "{op}: non-finite value produced"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Data(msg) => write!(f, "data error: {msg}"),
            Error::Diverged { epoch, batch, op } => write!(
                f,
                "training diverged at epoch {epoch}, batch {batch}: non-finite value in {op}"
            ),
        }
    }
}

impl core::error::Error for Error {}
