//! Error type shared across the library.

use thiserror::Error;

/// Library-wide error enum. The CLI maps these onto process exit codes via
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("unsupported audio: {0}")]
    UnsupportedAudio(String),

    #[error("audio stream is empty")]
    EmptyAudio,

    #[error("clip too short: {got} samples, need at least {need}")]
    ClipTooShort { got: usize, need: usize },

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("no voice detected")]
    NoVoiceDetected,

    #[error("empty vowel sequence")]
    EmptyVowelSequence,

    #[error("word not in pronouncing dictionary: {0}")]
    OutOfVocabulary(String),

    #[error("unknown vowel label: {0}")]
    UnknownLabel(String),

    #[error("numerical failure in {context}: {reason}")]
    Numerical { context: &'static str, reason: String },

    #[error("parse error in {context}: {reason}")]
    Parse { context: String, reason: String },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the pipeline stage that produced it.
    pub fn stage(stage: &'static str, source: Error) -> Error {
        Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    pub fn shape(context: &'static str, expected: impl Into<String>, got: impl Into<String>) -> Error {
        Error::ShapeMismatch {
            context,
            expected: expected.into(),
            got: got.into(),
        }
    }

    pub fn numerical(context: &'static str, reason: impl Into<String>) -> Error {
        Error::Numerical {
            context,
            reason: reason.into(),
        }
    }

    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code for the CLI: 2 input error, 3 no voice or empty
    /// vowel sequence, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::NoVoiceDetected | Error::EmptyVowelSequence => 3,
            Error::Numerical { .. } => 4,
            _ => 2,
        }
    }
}
