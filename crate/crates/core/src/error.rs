use thiserror::Error;

pub type Result<T> = std::result::Result<T, BanditError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BanditError {
    #[error("arm {arm} is out of range for a bandit with {arms} arms")]
    ArmOutOfRange { arm: usize, arms: usize },

    #[error("a bandit needs at least two arms, got {0}")]
    TooFewArms(usize),

    #[error("context has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("contextual bandit requires a context")]
    MissingContext,

    #[error("non-contextual bandit does not take a context")]
    UnexpectedContext,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("reward {0} is not binary")]
    NonBinaryReward(f64),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("posterior and draws do not match the reward model: {0}")]
    ModelMismatch(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("realization {stream} failed at step {step}: {source}")]
    EpisodeFailed {
        stream: u64,
        step: usize,
        source: Box<BanditError>,
    },
}

pub(crate) fn invalid(msg: impl Into<String>) -> BanditError {
    BanditError::InvalidParameter(msg.into())
}
