use thiserror::Error;

/// Errors raised by the coding schemes and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step out of order: expected step {expected}, got {got}")]
    StepMismatch { expected: usize, got: usize },

    #[error("sequence `{name}` has length {got}, expected {expected}")]
    LengthMismatch {
        name: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("gain is zero but interference at step {step} is nonzero")]
    DegenerateGain { step: usize },

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("search budget exceeded: {needed} candidates > limit {limit}")]
    BudgetExceeded { needed: u128, limit: u128 },

    #[error(transparent)]
    Codec(#[from] CodecError),

    #[error("stage {stage}: {source}")]
    Stage { stage: usize, source: CodecError },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_stage(stage: usize) -> impl FnOnce(CodecError) -> Error {
        move |source| Error::Stage { stage, source }
    }
}

/// Failures of the binning, inversion and shaping codecs.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("no jointly typical sequence in the bin")]
    EmptyBin,

    #[error("{count} jointly typical sequences share the bin")]
    Ambiguous { count: usize, first: Vec<usize> },

    #[error("bit string has length {got}, expected {expected}")]
    BitLength { expected: usize, got: usize },

    #[error("payload of {payload} bits exceeds shaper budget of {budget} bits")]
    ShaperOverflow { payload: usize, budget: usize },

    #[error("shaper index out of range of the typical set")]
    IndexOutOfRange,

    #[error("sequence is not jointly typical with the conditioning sequence")]
    NotTypical,

    #[error("shaper padding bits are nonzero")]
    BadPadding,

    #[error("the conditional typical set is empty")]
    EmptyTypicalSet,

    #[error("search needs {needed} candidates, limit is {limit}")]
    SearchBudget { needed: u128, limit: u128 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
