use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be positive")]
    InvalidDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cannot binarize an empty accumulator")]
    EmptyAccumulator,
    #[error("accumulator overflow: total weight would exceed the 32-bit counter range")]
    CounterOverflow,
    #[error("invalid number of levels {0}: need at least 2")]
    InvalidLevels(usize),
    #[error("dimension {dim} too small for {num_levels} disjoint level blocks")]
    LevelTableTooSmall { dim: usize, num_levels: usize },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("shape mismatch: expected {expected_channels}x{expected_features}, got {channels}x{features}")]
    ShapeMismatch {
        expected_channels: usize,
        expected_features: usize,
        channels: usize,
        features: usize,
    },
    #[error("class {0} has no training samples")]
    MissingClass(u8),
    #[error("samples and labels differ in length ({samples} vs {labels})")]
    LabelCountMismatch { samples: usize, labels: usize },
    #[error("model has no centroids")]
    EmptyModel,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty label sequence")]
    EmptySequence,
    #[error("insufficient data: {nonzero} non-zero differences, need at least {required}")]
    InsufficientData { nonzero: usize, required: usize },
    #[error("decode error at byte {offset}: {reason}")]
    Decode { offset: usize, reason: &'static str },
    #[error("unknown strategy tag")]
    UnknownStrategy,
}

pub(crate) fn check_dims(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}
