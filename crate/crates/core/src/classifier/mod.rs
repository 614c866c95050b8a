//! Classification layer: regularized LDA over CSP features, repeated
//! stratified cross-validation, training-progress aggregation, and
//! persistence of trained models.
//!
//! This module owns the end-to-end *pipeline* glue: band-pass → analysis
//! window → CSP fit → log-variance features → LDA. Cross-validation refits
//! the whole chain inside every training fold, so no statistic of the test
//! fold can leak into filters or classifier.

mod cv;
mod lda;
mod persist;

pub use cv::{cross_validate, stratified_folds, train_models, CvConfig, CvReport, PipelineConfig};
pub use lda::{lda_fit, lda_predict, LdaModel, LdaOptions};
pub use persist::{
    load_model, model_from_json, model_to_json, save_model, TrainedModel, MODEL_FORMAT,
    MODEL_VERSION,
};

use thiserror::Error;

use crate::csp::CspError;
use crate::dsp::DspError;
use crate::error::ErrorCategory;
use crate::signal_model::{DataError, Label};

/// Failures in LDA fitting, cross-validation, or model persistence.
#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data contains only one class")]
    SingleClass,
    #[error("pooled covariance is singular: {0}")]
    SingularCovariance(String),
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("too few {class:?} trials: have {have}, need at least {need}")]
    TooFewTrials { class: Label, have: usize, need: usize },
    #[error("trial {index} is unlabeled; classification requires Left/Right labels")]
    UnlabeledTrial { index: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("model document: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Csp(#[from] CspError),
    #[error(transparent)]
    Data(#[from] DataError),
}

impl ClassifierError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            ClassifierError::SingularCovariance(_) => ErrorCategory::Numerical,
            ClassifierError::Dsp(e) => e.category(),
            ClassifierError::Csp(e) => e.category(),
            ClassifierError::Data(e) => e.category(),
            _ => ErrorCategory::Data,
        }
    }
}

/// Per-week means of a per-session metric: values are grouped in order into
/// blocks of `per_week`; a trailing partial week is averaged over its own
/// length.
pub fn weekly_progress(values: &[f64], per_week: usize) -> Result<Vec<f64>, ClassifierError> {
    if per_week == 0 {
        return Err(ClassifierError::InvalidParams(
            "per_week must be at least 1".into(),
        ));
    }
    Ok(values
        .chunks(per_week)
        .map(|chunk| chunk.iter().sum::<f64>() / chunk.len() as f64)
        .collect())
}
