use alloc::string::String;
use core::fmt;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A numeric argument is outside its admissible range.
    Parameter(String),
    /// Raster dimensions or channel count do not fit the operation.
    Shape(String),
    /// Operator needs a channel layout the image does not have.
    UnsupportedChannels { op: &'static str, channels: usize },
    /// The operator is declared in the pool but has no implementation.
    NotImplemented(&'static str),
    /// A metric is undefined for the given input (e.g. AP without positives).
    UndefinedMetric(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// Short stable category name, suitable for machine parsing.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Shape(_) => "shape",
            Error::UnsupportedChannels { .. } => "unsupported-channels",
            Error::NotImplemented(_) => "not-implemented",
            Error::UndefinedMetric(_) => "undefined-metric",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(m) => write!(f, "invalid parameter: {m}"),
            Error::Shape(m) => write!(f, "invalid shape: {m}"),
            Error::UnsupportedChannels { op, channels } => {
                write!(f, "{op} does not support {channels}-channel images")
            }
            Error::NotImplemented(name) => write!(f, "operator {name} is not implemented"),
            Error::UndefinedMetric(m) => write!(f, "undefined metric: {m}"),
        }
    }
}

impl core::error::Error for Error {}
