use thiserror::Error;

/// Problems with a scenario or experiment configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),

    #[error("invalid config (line {line}): {message}")]
    AtLine { line: usize, message: String },

    #[error("malformed config: {0}")]
    Parse(String),

    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        ConfigError::Invalid(message.into())
    }
}

/// Errors raised by the neural network toolkit.
#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite values in {0}, update skipped")]
    NonFinite(&'static str),

    #[error("invalid network configuration: {0}")]
    Config(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
}

impl NnError {
    pub(crate) fn shape(
        context: &'static str,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        NnError::Shape {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

/// Top-level error for simulation and experiment runs.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Nn(#[from] NnError),

    #[error("episode finished: slot {slot} is past the horizon of {horizon} slots")]
    EpisodeFinished { slot: usize, horizon: usize },

    #[error("metric requested over an empty trace")]
    EmptyTrace,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
