use alloc::string::String;
use core::fmt;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated an operation precondition.
    InvalidArgument(String),
    /// Two tensors or images that must agree in shape did not.
    ShapeMismatch { expected: String, found: String },
    /// An event lies outside the declared sensor geometry.
    OutOfBounds(String),
    /// Input data for an operation was empty.
    Empty(&'static str),
    /// A value was not finite or left its permitted range.
    NonFinite(&'static str),
    /// A geometric solver could not produce an estimate.
    Degenerate(String),
    /// A wire frame could not be decoded.
    Frame(String),
    /// PSNR is unbounded for identical images.
    InfinitePsnr,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {expected}, found {found}")
            }
            Error::OutOfBounds(msg) => write!(f, "out of bounds: {msg}"),
            Error::Empty(what) => write!(f, "empty input: {what}"),
            Error::NonFinite(what) => write!(f, "non-finite or out-of-range value in {what}"),
            Error::Degenerate(msg) => write!(f, "degenerate configuration: {msg}"),
            Error::Frame(msg) => write!(f, "malformed frame: {msg}"),
            Error::InfinitePsnr => write!(f, "PSNR is infinite for identical images"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn shape_err(expected: impl fmt::Debug, found: impl fmt::Debug) -> Error {
    Error::ShapeMismatch {
        expected: alloc::format!("{expected:?}"),
        found: alloc::format!("{found:?}"),
    }
}
