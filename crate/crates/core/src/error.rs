use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the synthesis, analysis and optimization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside [{lower}, {upper}]")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("signal too short: need at least {needed} samples, got {got}")]
    SignalTooShort { needed: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: u32, right: u32 },

    #[error("signal is silent")]
    SilentSignal,

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("{method} does not support {dim}-dimensional problems")]
    UnsupportedDimension { method: &'static str, dim: usize },

    #[error("wav file {path}: expected 1 channel, found {channels}")]
    WavChannels { path: PathBuf, channels: u16 },

    #[error("wav file {path}: expected 48000 Hz, found {rate} Hz")]
    WavSampleRate { path: PathBuf, rate: u32 },

    #[error("wav file {path}: unsupported encoding ({detail})")]
    WavEncoding { path: PathBuf, detail: String },

    #[error("wav file {path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("score file line {line}: {detail}")]
    InvalidScore { line: usize, detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by bad input values.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Wav { .. } | Error::Json { .. } | Error::Csv { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
