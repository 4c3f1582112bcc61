use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("sample {value} at pixel ({x}, {y}) is outside the declared range [{lo}, {hi}]")]
    RangeViolation {
        x: usize,
        y: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("accuracy bound not applicable: kernel error {kernel_err} is not below w(0) = {w0}")]
    BoundInapplicable { kernel_err: f64, w0: f64 },

    #[error("numeric range exceeded: {0}")]
    NumericRange(String),

    #[error("unsupported image format in {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
