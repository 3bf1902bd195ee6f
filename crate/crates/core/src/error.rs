use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("reward {0} is not finite")]
    NonFiniteReward(f64),

    #[error("matrix is not positive definite: pivot {index} has value {value:e}")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown agent spec `{0}`")]
    UnknownAgent(String),

    #[error("agent `{agent}` is incompatible: {reason}")]
    Incompatible { agent: String, reason: String },

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("action {action} out of range for {available} actions")]
    InvalidAction { action: usize, available: usize },

    #[error("missing results for agent `{agent}` on scenario {scenario}")]
    MissingCell { agent: String, scenario: usize },

    #[error("metric `{metric}` is unavailable: {reason}")]
    MetricUnavailable { metric: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
