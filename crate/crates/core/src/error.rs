//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("label column `{0}` not found in header")]
    MissingColumn(String),
    #[error("cell at data row {row}, column {col} is not a finite number")]
    NonNumericCell { row: usize, col: usize },
    #[error("file `{0}` has no data rows")]
    EmptyFile(String),
    #[error("missing value at data row {row}, column {col} rejected (NaN policy is reject)")]
    NaNPolicyViolation { row: usize, col: usize },
    #[error("label at data row {row} must be 0 or 1, got `{value}`")]
    InvalidLabel { row: usize, value: String },
    #[error("stratified split needs at least {needed} samples of each class, found {found}")]
    TooFewPositives { needed: usize, found: usize },
    #[error("covariance matrix is not symmetric positive-definite")]
    NonPositiveDefiniteCovariance,
    #[error("k = {k} exceeds the {available} available rows")]
    KTooLarge { k: usize, available: usize },
    #[error("need at least {needed} minority samples, found {found}")]
    TooFewMinority { needed: usize, found: usize },
    #[error("training input contains a single class")]
    SingleClassInput,
    #[error("optimization diverged to a non-finite loss")]
    DivergenceDetected,
    #[error("feature dimension {got} does not match fitted dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("held-out synthetic set is empty")]
    EmptyHoldout,
    #[error("need at least {needed} samples per side, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("fold {fold}: {source}")]
    FoldContext {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Wraps an error with the index of the cross-validation fold it came from.
    pub fn in_fold(self, fold: usize) -> Error {
        Error::FoldContext {
            fold,
            source: Box::new(self),
        }
    }

    /// True for errors caused by the shape or content of input data, as
    /// opposed to runtime failures. The CLI maps these to distinct exit codes.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::MissingColumn(_)
            | Error::NonNumericCell { .. }
            | Error::EmptyFile(_)
            | Error::NaNPolicyViolation { .. }
            | Error::InvalidLabel { .. }
            | Error::TooFewPositives { .. }
            | Error::NonPositiveDefiniteCovariance
            | Error::KTooLarge { .. }
            | Error::TooFewMinority { .. }
            | Error::SingleClassInput
            | Error::DimensionMismatch { .. }
            | Error::EmptyHoldout
            | Error::TooFewSamples { .. } => true,
            Error::FoldContext { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}
