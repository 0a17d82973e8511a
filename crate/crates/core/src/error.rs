use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Every failure is a value; no operation panics on bad input.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetraError {
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("calibration needs exactly {expected} samples, got {got}")]
    CalibrationArity { expected: usize, got: usize },

    #[error("calibration incomplete ({have} of 5 samples)")]
    CalibrationIncomplete { have: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error at `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("invalid detection: {0}")]
    InvalidDetection(String),

    #[error("invalid alert: {0}")]
    InvalidAlert(String),

    #[error("malformed frame: {0}")]
    Malformed(String),

    #[error("frame integrity check failed (crc {expected:#06x} != {found:#06x})")]
    Integrity { expected: u16, found: u16 },

    #[error("unsupported frame version {0:#04x}")]
    Version(u8),

    #[error("frame length {got}, expected {expected}")]
    Length { expected: usize, got: usize },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("io error on {path}: {msg}")]
    Io {
        path: String,
        kind: std::io::ErrorKind,
        msg: String,
    },
}

impl NetraError {
    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        NetraError::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        NetraError::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        NetraError::Io {
            path: path.display().to_string(),
            kind: err.kind(),
            msg: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, NetraError>;
