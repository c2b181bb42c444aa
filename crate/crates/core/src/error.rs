use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the inversion pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate signal: {0}")]
    DegenerateSignal(String),
    #[error("signal too short: {len} samples, need at least {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("invalid cutoff: {cutoff_hz} Hz must lie in (0, {nyquist_hz}) Hz")]
    InvalidCutoff { cutoff_hz: f64, nyquist_hz: f64 },
    #[error("invalid filter length {0}, need at least 3 taps")]
    InvalidTaps(usize),
    #[error("degenerate coordinate: constriction location undefined at the origin")]
    DegenerateCoordinate,
    #[error("negative radicand {value} in literal lip-aperture formula")]
    NegativeRadicand { value: f64 },
    #[error("channel {channel} has zero variance")]
    ConstantChannel { channel: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty batch: every frame is masked")]
    EmptyBatch,
    #[error("empty evaluation set")]
    EmptyEvaluation,
    #[error("correlation undefined for constant input")]
    UndefinedCorrelation,
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("selector error: {0}")]
    Selector(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("persistence error: {0}")]
    Persistence(String),
    #[error("failed to load utterance {id}: {reason}")]
    Load { id: String, reason: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
