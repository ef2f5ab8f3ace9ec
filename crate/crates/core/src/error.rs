use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),

    #[error("original image has zero total variation; d_tv is undefined")]
    ConstantOriginal,

    #[error("original image has zero L2 norm; d_l2 is undefined")]
    ZeroOriginal,

    #[error("grid {rows}x{cols} is smaller than the {window}-point SSIM window")]
    GridTooSmall {
        rows: usize,
        cols: usize,
        window: usize,
    },

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("malformed image data in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("unsupported bit depth in {path}: {depth}")]
    UnsupportedBitDepth { path: PathBuf, depth: String },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NonFinite(_) => "non_finite",
            Error::ConstantOriginal => "constant_original",
            Error::ZeroOriginal => "zero_original",
            Error::GridTooSmall { .. } => "grid_too_small",
            Error::FileNotFound(_) => "file_not_found",
            Error::MalformedHeader { .. } => "malformed_header",
            Error::UnsupportedBitDepth { .. } => "unsupported_bit_depth",
            Error::UnsupportedFormat(_) => "unsupported_format",
            Error::Io { .. } => "io",
        }
    }
}
