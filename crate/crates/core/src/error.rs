//! Error types shared across the crate.

use thiserror::Error;

/// Reason a binary stream failed to parse.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatErrorKind {
    #[error("bad magic (expected {expected:?}, found {found:?})")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated record ({missing} byte(s) missing)")]
    Truncated { missing: usize },
    #[error("channel {channel} out of range (file declares {channel_count} channel(s))")]
    ChannelOutOfRange { channel: u8, channel_count: u8 },
    #[error("invalid header field {field}: {message}")]
    InvalidHeader { field: &'static str, message: String },
}

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or configuration parameter is outside its declared range.
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// A calibration or fit has no real solution for the given inputs.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// An estimator was given data it cannot work with.
    #[error("estimator input: {0}")]
    EstimatorInput(String),

    /// Structured parse failure in a binary stream, with the byte offset
    /// at which the problem was detected.
    #[error("parse error at byte {offset}: {kind}")]
    Format { offset: u64, kind: FormatErrorKind },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    pub fn format(offset: u64, kind: FormatErrorKind) -> Self {
        Error::Format { offset, kind }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
