//! Oversampling for extreme class imbalance with adversarial filtering.
//!
//! The crate generates synthetic minority candidates (SMOTE, ADASYN,
//! Borderline-SMOTE, SVM-SMOTE), scores every candidate with a realism
//! discriminator and a boundary-utility head, retains the high-scoring
//! subset, and evaluates the resulting classifiers with an
//! imbalance-aware metric suite (precision-floor thresholds, BCa
//! bootstrap intervals, DeLong tests, calibration diagnostics).
//!
//! Numeric kernels are generic over the scalar type through [`Float`];
//! the [`pipeline`] orchestration layer and the CLI work in `f64` via
//! the concrete aliases exported at the crate root.

pub mod calibration;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod filter;
pub mod linalg;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};

use std::fmt;

/// Scalar type accepted by the numeric kernels: `f32` or `f64`.
pub trait Float:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + fmt::Debug
    + fmt::Display
    + std::iter::Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into the scalar type.
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to scalar")
    }

    /// Widens the scalar to `f64` for reporting.
    fn to64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Float for f32 {}
impl Float for f64 {}

pub type Matrix32 = linalg::Matrix<f32>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type Dataset32 = dataset::Dataset<f32>;
pub type Dataset64 = dataset::Dataset<f64>;
pub type CandidateSet32 = samplers::CandidateSet<f32>;
pub type CandidateSet64 = samplers::CandidateSet<f64>;
pub type CalibrationMap32 = calibration::CalibrationMap<f32>;
pub type CalibrationMap64 = calibration::CalibrationMap<f64>;
pub type FilteredSet32 = filter::FilteredSet<f32>;
pub type FilteredSet64 = filter::FilteredSet<f64>;

/// Artifact version recorded in every provenance block.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
