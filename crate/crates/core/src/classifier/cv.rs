//! End-to-end training pipeline and repeated stratified cross-validation.
//!
//! The pipeline is: causal band-pass → analysis window → per-trial
//! covariance → CSP fit → log-variance features → LDA. Cross-validation
//! caches the per-trial covariances (they do not depend on the fold split —
//! the band, window, and trace normalization are fold-independent) and
//! refits CSP + LDA from scratch on every training fold, evaluating on the
//! held-out fold only.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lda::{lda_fit, lda_predict, LdaModel, LdaOptions};
use super::ClassifierError;
use crate::csp::{
    class_mean_covariance, csp_decompose, features_from_covariance, select_filters,
    trial_covariance, CspModel, CspOptions, FitContext, SpatialCovariance,
};
use crate::dsp::{design_butterworth_bandpass, filter_set, FilterMode};
use crate::seeding::{stream_rng, DOMAIN_CV_REPETITION};
use crate::signal_model::{EpochSet, Label};

/// Shared configuration of the train/evaluate pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Band-pass edges in Hz.
    pub band: (f64, f64),
    /// Butterworth design order.
    pub order: usize,
    /// CSP filter pairs to keep (feature dimension is 2m).
    pub m: usize,
    /// Analysis window in seconds from trial start (cue + 0.5 s to
    /// cue + 4.0 s under the default trial schedule).
    pub window_s: (f64, f64),
    /// CSP regularization.
    pub csp: CspOptions,
    /// LDA covariance shrinkage.
    pub lda_shrinkage: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            band: (8.0, 30.0),
            order: 5,
            m: 3,
            window_s: (2.5, 6.0),
            csp: CspOptions::default(),
            lda_shrinkage: LdaOptions::default().shrinkage,
        }
    }
}

/// Cross-validation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub repetitions: usize,
    /// Master seed; repetition `r` shuffles with the derived stream
    /// `(seed, DOMAIN_CV_REPETITION, r)`.
    pub seed: u64,
    pub pipeline: PipelineConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { folds: 10, repetitions: 10, seed: 0, pipeline: PipelineConfig::default() }
    }
}

/// Result of a repeated stratified cross-validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    /// `fold_accuracies[r][f]` = accuracy of fold `f` in repetition `r`.
    pub fold_accuracies: Vec<Vec<f64>>,
    /// Arithmetic mean over all repetition × fold accuracies.
    pub mean_accuracy: f64,
    /// Sample standard deviation over the same values.
    pub std_accuracy: f64,
    pub n_trials: usize,
    pub n_left: usize,
    pub n_right: usize,
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
}

/// Stratified fold assignment: labeled trial indices are shuffled per class
/// and dealt into `folds` groups whose per-class sizes differ by at most one.
/// Returns `folds` disjoint index lists covering every labeled trial.
pub fn stratified_folds(
    labels: &[Label],
    folds: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>, ClassifierError> {
    if folds < 2 {
        return Err(ClassifierError::InvalidParams(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    let mut assignment: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for class in [Label::Left, Label::Right] {
        let mut idx: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            // A class with zero trials is a different disease than one with
            // too few: the data carries only one class at all.
            return Err(ClassifierError::SingleClass);
        }
        if idx.len() < folds {
            return Err(ClassifierError::TooFewTrials {
                class,
                have: idx.len(),
                need: folds,
            });
        }
        idx.shuffle(rng);
        // First (n mod folds) chunks take one extra trial.
        let base = idx.len() / folds;
        let extra = idx.len() % folds;
        let mut cursor = 0;
        for (f, fold) in assignment.iter_mut().enumerate() {
            let take = base + usize::from(f < extra);
            fold.extend_from_slice(&idx[cursor..cursor + take]);
            cursor += take;
        }
    }
    for fold in &mut assignment {
        fold.sort_unstable();
    }
    Ok(assignment)
}

/// Fits the full pipeline (CSP + LDA) on every labeled trial of `set`.
pub fn train_models(
    set: &EpochSet,
    cfg: &PipelineConfig,
) -> Result<(CspModel, LdaModel), ClassifierError> {
    let prepared = prepare(set, cfg)?;
    let all: Vec<usize> = (0..prepared.labels.len()).collect();
    let (csp, lda) = fit_fold(&prepared, &all, cfg)?;
    Ok((csp, lda))
}

/// Repeated stratified cross-validation with CSP refit inside every fold.
pub fn cross_validate(set: &EpochSet, cfg: &CvConfig) -> Result<CvReport, ClassifierError> {
    if cfg.repetitions == 0 {
        return Err(ClassifierError::InvalidParams("repetitions must be >= 1".into()));
    }
    let prepared = prepare(set, &cfg.pipeline)?;
    let n = prepared.labels.len();
    let n_left = prepared.labels.iter().filter(|&&l| l == Label::Left).count();
    let n_right = n - n_left;

    // Repetitions are independent given their derived RNG stream, so they
    // can run in parallel without affecting results.
    let fold_accuracies: Result<Vec<Vec<f64>>, ClassifierError> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(cfg.seed, DOMAIN_CV_REPETITION, rep as u64);
            let folds = stratified_folds(&prepared.labels, cfg.folds, &mut rng)?;
            folds
                .iter()
                .map(|test_idx| {
                    let train_idx: Vec<usize> =
                        (0..n).filter(|i| !test_idx.contains(i)).collect();
                    let (csp, lda) = fit_fold(&prepared, &train_idx, &cfg.pipeline)?;
                    let mut correct = 0usize;
                    for &i in test_idx {
                        let f = features_from_covariance(&csp, &prepared.covariances[i])?;
                        let (predicted, _) = lda_predict(&lda, &f)?;
                        if predicted == prepared.labels[i] {
                            correct += 1;
                        }
                    }
                    Ok(correct as f64 / test_idx.len() as f64)
                })
                .collect()
        })
        .collect();
    let fold_accuracies = fold_accuracies?;

    let flat: Vec<f64> = fold_accuracies.iter().flatten().copied().collect();
    let mean = flat.iter().sum::<f64>() / flat.len() as f64;
    let var = if flat.len() > 1 {
        flat.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (flat.len() - 1) as f64
    } else {
        0.0
    };

    Ok(CvReport {
        fold_accuracies,
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
        n_trials: n,
        n_left,
        n_right,
        folds: cfg.folds,
        repetitions: cfg.repetitions,
        seed: cfg.seed,
    })
}

/// Filtered, windowed, covariance-cached view of the labeled trials.
struct Prepared {
    labels: Vec<Label>,
    covariances: Vec<SpatialCovariance>,
    ctx: FitContext,
}

/// Runs the fold-independent part of the pipeline once: causal band-pass,
/// window extraction, per-trial covariance. Unlabeled trials are excluded.
fn prepare(set: &EpochSet, cfg: &PipelineConfig) -> Result<Prepared, ClassifierError> {
    let filter = design_butterworth_bandpass(cfg.order, cfg.band.0, cfg.band.1, set.fs())?;
    let filtered = filter_set(&filter, set, FilterMode::Causal)?;

    let labeled: Vec<usize> = (0..set.len())
        .filter(|&i| set.epochs()[i].label.is_labeled())
        .collect();
    if labeled.is_empty() {
        return Err(ClassifierError::SingleClass);
    }
    let labels: Vec<Label> = labeled.iter().map(|&i| filtered.epochs()[i].label).collect();

    let covariances: Result<Vec<SpatialCovariance>, ClassifierError> = labeled
        .par_iter()
        .map(|&i| {
            let w = filtered.epochs()[i].window(cfg.window_s.0, cfg.window_s.1)?;
            Ok(trial_covariance(&w)?)
        })
        .collect();

    Ok(Prepared {
        labels,
        covariances: covariances?,
        ctx: FitContext {
            montage: set.montage().clone(),
            band: cfg.band,
            window_s: cfg.window_s,
            fs: set.fs(),
        },
    })
}

/// Fits CSP + LDA on the given training indices of a prepared set.
fn fit_fold(
    prepared: &Prepared,
    train_idx: &[usize],
    cfg: &PipelineConfig,
) -> Result<(CspModel, LdaModel), ClassifierError> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &i in train_idx {
        match prepared.labels[i] {
            Label::Left => left.push(prepared.covariances[i].clone()),
            Label::Right => right.push(prepared.covariances[i].clone()),
            Label::Unlabeled => unreachable!("unlabeled trials are excluded in prepare()"),
        }
    }
    if left.is_empty() || right.is_empty() {
        return Err(ClassifierError::SingleClass);
    }
    let mean_left = class_mean_covariance(&left)?;
    let mean_right = class_mean_covariance(&right)?;
    let decomposition = csp_decompose(&mean_left, &mean_right, &cfg.csp)?;
    let csp = select_filters(
        &decomposition,
        cfg.m,
        &cfg.csp,
        &prepared.ctx,
        left.len(),
        right.len(),
    )?;

    let mut features = Vec::with_capacity(train_idx.len());
    let mut labels = Vec::with_capacity(train_idx.len());
    for &i in train_idx {
        features.push(features_from_covariance(&csp, &prepared.covariances[i])?);
        labels.push(prepared.labels[i]);
    }
    let lda = lda_fit(&features, &labels, &LdaOptions { shrinkage: cfg.lda_shrinkage })?;
    Ok((csp, lda))
}
