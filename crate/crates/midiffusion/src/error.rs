use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("window exceeds image extent: window {window} vs image {height}x{width}")]
    WindowExceedsImage {
        window: usize,
        height: usize,
        width: usize,
    },

    #[error("query offset ({0}, {1}) outside the tiling extent")]
    OffsetOutsideExtent(i64, i64),

    #[error("empty sample vectors")]
    EmptySamples,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("size guard exceeded: {height}x{width} image (limit {limit}x{limit}); set the override flag to force")]
    SizeGuard {
        height: usize,
        width: usize,
        limit: usize,
    },

    #[error("score diverged")]
    ScoreDiverged,

    #[error("non-finite loss at iteration {iteration}: {value}")]
    NonFiniteLoss { iteration: usize, value: f64 },

    #[error("checkpoint format error: {0}")]
    CheckpointFormat(String),

    #[error("checkpoint/config mismatch: {0}")]
    CheckpointMismatch(String),

    #[error("image format error: {0}")]
    ImageFormat(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
