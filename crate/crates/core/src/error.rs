use thiserror::Error;

use crate::experiment::PairChoice;

pub type Result<T, E = LgError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LgError {
    #[error("degenerate slot pair: both measurements at {0}")]
    DegeneratePair(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("freedom of choice violated: preparation and setting choice are not space-like separated (interval {interval}); set override_foc to run anyway")]
    FreedomOfChoice { interval: f64 },

    #[error("pair selection failed after {0} rejected draws")]
    PairSelectionExhausted(u32),

    #[error("pair {pair} is undersampled: {n} trials, need at least {min}")]
    UndersampledPair { pair: PairChoice, n: u64, min: u64 },

    #[error("estimate for pair {0} is missing")]
    MissingPair(PairChoice),

    #[error("trial log line {line}: {reason}")]
    TrialLog { line: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl LgError {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        LgError::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
