use std::path::PathBuf;

/// Errors raised anywhere in the reconstruction stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("block origin ({x}, {y}, {t}) lies outside the volume")]
    OutOfBounds { x: usize, y: usize, t: usize },

    #[error("frame {frame} has no available samples")]
    NoSamples { frame: usize },

    #[error("frame of {width}x{height} is smaller than the polynomial neighborhood ({needed} px)")]
    FrameTooSmall {
        width: usize,
        height: usize,
        needed: usize,
    },

    #[error("empty rectangle")]
    EmptyRegion,

    #[error("malformed {format} data: {reason}")]
    Format {
        format: &'static str,
        reason: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable short code used in CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "E_DIM_MISMATCH",
            Error::InvalidDimensions(_) => "E_DIMENSIONS",
            Error::InvalidParameter { .. } => "E_PARAM",
            Error::OutOfBounds { .. } => "E_OUT_OF_BOUNDS",
            Error::NoSamples { .. } => "E_NO_SAMPLES",
            Error::FrameTooSmall { .. } => "E_FRAME_TOO_SMALL",
            Error::EmptyRegion => "E_EMPTY_REGION",
            Error::Format { .. } => "E_FORMAT",
            Error::Config(_) => "E_CONFIG",
            Error::Io { .. } => "E_IO",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn mismatch(
        what: &'static str,
        expected: impl std::fmt::Debug,
        actual: impl std::fmt::Debug,
    ) -> Self {
        Error::DimensionMismatch {
            what,
            expected: format!("{expected:?}"),
            actual: format!("{actual:?}"),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
