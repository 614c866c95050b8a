//! Motor-imagery EEG analysis toolkit.
//!
//! The crate covers the full path from raw multi-channel trials to a
//! simulated closed-loop feedback run:
//!
//! - [`signal_model`] — trials, labels, montage, and the binary / CSV
//!   interchange formats.
//! - [`dsp`] — Butterworth band-pass design and causal or zero-phase
//!   filtering.
//! - [`csp`] — common spatial patterns: covariance whitening, filter
//!   extraction, and log-variance features.
//! - [`classifier`] — shrinkage LDA, the end-to-end training pipeline, and
//!   repeated stratified cross-validation with per-fold refitting.
//! - [`spectral`] — Welch power spectral densities, band power, and scalp
//!   maps of fitted patterns.
//! - [`synthgen`] — synthetic lateralized ERD datasets with a
//!   machine-readable ground-truth record.
//! - [`session`] — the deterministic trial state machine, online
//!   classification, and the stimulator trigger rule with its wire codec.
//! - [`eval`] — clinical subject fixture and motor-outcome reports.
//! - [`seeding`] — derived RNG streams that keep every stochastic step
//!   reproducible and order-independent.
//!
//! All numeric work is `f64` in memory; the binary interchange format
//! stores samples as `f32`, and the bundled generator quantizes to `f32`
//! so round trips are bit-exact.

pub mod classifier;
pub mod csp;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod seeding;
pub mod session;
pub mod signal_model;
pub mod spectral;
pub mod synthgen;

pub use classifier::{
    cross_validate, lda_fit, lda_predict, load_model, save_model, train_models, ClassifierError,
    CvConfig, CvReport, LdaModel, LdaOptions, PipelineConfig, TrainedModel,
};
pub use csp::{
    class_mean_covariance, csp_decompose, csp_features, csp_fit, trial_covariance,
    whitening_transform, CspDecomposition, CspModel, CspOptions, FeatureVector,
    SpatialCovariance,
};
pub use dsp::{design_butterworth_bandpass, filter_epoch, filter_set, FilterMode, IirFilter};
pub use error::{Error, ErrorCategory, Result};
pub use eval::{
    improvement_report, load_fixture_subjects, EvalError, ImprovementReport, SubjectRecord,
};
pub use session::{
    decode_fes, encode_fes, run_session, EventKind, FesChannel, FesCommand, FesError,
    SessionConfig, SessionError, SessionEvent, SessionLog, StateMachine, TrialOutcome,
    TrialSchedule,
};
pub use signal_model::{
    load_epochs, load_epochs_csv, save_epochs, save_epochs_csv, validate_montage, Epoch, EpochSet,
    Label, Montage,
};
pub use spectral::{
    band_power, class_average_psd, pattern_map, welch_psd, PatternMap, Psd, SpectralError,
    WelchConfig,
};
pub use synthgen::{generate_dataset, ground_truth, GenError, GenParams, GroundTruth};
