use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape {dims:?}: {reason}")]
    InvalidShape { dims: Vec<usize>, reason: &'static str },

    #[error("mode {mode} out of range for a {ndim}-way tensor")]
    InvalidMode { mode: usize, ndim: usize },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Vec<usize>, found: Vec<usize> },

    #[error("index {index:?} out of range for shape {dims:?}")]
    IndexOutOfRange { index: Vec<usize>, dims: Vec<usize> },

    #[error("element offset {offset} out of range for {len} elements")]
    OffsetOutOfRange { offset: usize, len: usize },

    #[error("duplicate observation at offset {0}")]
    DuplicateObservation(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("SVD did not converge")]
    SvdFailed,

    #[error("no cached SVD for mode {0}; run at least one sweep first")]
    MissingSvdCache(usize),

    #[error("requested {requested} patterns but only {available} candidates exist")]
    NotEnoughCandidates { requested: usize, available: usize },

    #[error("pattern {0} overlaps the observation set")]
    PatternOverlap(usize),

    #[error("reference tensor has zero norm")]
    ZeroReference,
}
