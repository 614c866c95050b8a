//! Two-class linear discriminant analysis with scalar covariance shrinkage.
//!
//! The discriminant is the classical pooled-covariance solution
//! `w ∝ Σ⁻¹ (μ_A − μ_B)`, `b = −w · (μ_A + μ_B)/2` (equal priors), with the
//! pooled covariance regularized towards a scaled identity:
//! `Σ ← (1−γ)·Σ + γ·(tr Σ / d)·I`. The default γ = 0.01 keeps 6-dimensional
//! CSP features stable on small training folds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::csp::FeatureVector;
use crate::signal_model::Label;

/// LDA hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaOptions {
    /// Shrinkage γ ∈ [0, 1] of the pooled covariance towards
    /// `(tr Σ / d)·I`.
    pub shrinkage: f64,
}

impl Default for LdaOptions {
    fn default() -> Self {
        LdaOptions { shrinkage: 0.01 }
    }
}

/// A fitted linear discriminant. `score = weights · f + bias`; scores `>= 0`
/// (ties included) map to `positive`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub weights: DVector<f64>,
    pub bias: f64,
    pub positive: Label,
    pub negative: Label,
    pub shrinkage: f64,
}

impl LdaModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }
}

/// Fits the discriminant on labeled feature vectors. `Label::Left` is the
/// positive class by convention.
pub fn lda_fit(
    features: &[FeatureVector],
    labels: &[Label],
    opts: &LdaOptions,
) -> Result<LdaModel, ClassifierError> {
    if features.len() != labels.len() {
        return Err(ClassifierError::DimensionMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    if !(0.0..=1.0).contains(&opts.shrinkage) {
        return Err(ClassifierError::InvalidParams(format!(
            "shrinkage {} outside [0, 1]",
            opts.shrinkage
        )));
    }
    let d = features
        .first()
        .ok_or(ClassifierError::SingleClass)?
        .len();
    let mut pos: Vec<&FeatureVector> = Vec::new();
    let mut neg: Vec<&FeatureVector> = Vec::new();
    for (i, (f, &l)) in features.iter().zip(labels).enumerate() {
        if f.len() != d {
            return Err(ClassifierError::DimensionMismatch { expected: d, got: f.len() });
        }
        match l {
            Label::Left => pos.push(f),
            Label::Right => neg.push(f),
            Label::Unlabeled => return Err(ClassifierError::UnlabeledTrial { index: i }),
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(ClassifierError::SingleClass);
    }
    let n = pos.len() + neg.len();
    if n < 3 {
        // The unbiased pooled covariance divides by n − 2.
        let (label, have) = if pos.len() <= neg.len() {
            (Label::Left, pos.len())
        } else {
            (Label::Right, neg.len())
        };
        return Err(ClassifierError::TooFewTrials { class: label, have, need: 2 });
    }

    let mean = |class: &[&FeatureVector]| -> DVector<f64> {
        let mut m = DVector::zeros(d);
        for f in class {
            m += *f;
        }
        m / class.len() as f64
    };
    let mu_pos = mean(&pos);
    let mu_neg = mean(&neg);

    // Pooled within-class covariance (unbiased): scatter / (n − 2).
    let mut scatter = DMatrix::zeros(d, d);
    for (class, mu) in [(&pos, &mu_pos), (&neg, &mu_neg)] {
        for f in class.iter() {
            let centered = *f - mu;
            scatter += &centered * centered.transpose();
        }
    }
    let mut sigma = scatter / (n - 2) as f64;

    if opts.shrinkage > 0.0 {
        let gamma = opts.shrinkage;
        let mu_tr = sigma.trace() / d as f64;
        sigma *= 1.0 - gamma;
        for i in 0..d {
            sigma[(i, i)] += gamma * mu_tr;
        }
    }

    let chol = sigma.clone().cholesky().ok_or_else(|| {
        ClassifierError::SingularCovariance(format!(
            "Cholesky failed (trace {:.3e}); features may be constant",
            sigma.trace()
        ))
    })?;
    let weights = chol.solve(&(&mu_pos - &mu_neg));
    let bias = -weights.dot(&(&mu_pos + &mu_neg)) / 2.0;
    if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(ClassifierError::SingularCovariance(
            "non-finite discriminant".into(),
        ));
    }

    Ok(LdaModel {
        weights,
        bias,
        positive: Label::Left,
        negative: Label::Right,
        shrinkage: opts.shrinkage,
    })
}

/// Scores one feature vector. Returns the predicted label and the signed
/// score; a score of exactly zero resolves to the positive class.
pub fn lda_predict(model: &LdaModel, f: &FeatureVector) -> Result<(Label, f64), ClassifierError> {
    if f.len() != model.n_features() {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.n_features(),
            got: f.len(),
        });
    }
    let score = model.weights.dot(f) + model.bias;
    let label = if score >= 0.0 { model.positive } else { model.negative };
    Ok((label, score))
}
