use alloc::string::String;

use crate::ClassId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("class {class_id} has {count} samples, need at least {required}")]
    TooFewSamples {
        class_id: ClassId,
        count: usize,
        required: usize,
    },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: ClassId, n_classes: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("band index {index} out of range for {n_bands} bands")]
    BandOutOfRange { index: usize, n_bands: usize },
    #[error("legend or grid mismatch: {0}")]
    Mismatch(String),
    #[error("SMO made no progress within {iterations} iterations")]
    NoConvergence { iterations: usize },
}
