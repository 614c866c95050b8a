//! Common spatial patterns (CSP) for two-class motor imagery.
//!
//! The decomposition follows the classical recipe:
//!
//! 1. per-trial spatial covariance, normalized by its trace
//!    ([`trial_covariance`]) and averaged per class
//!    ([`class_mean_covariance`]);
//! 2. whitening of the composite covariance `Cc = C̄_left + C̄_right` via its
//!    eigendecomposition, `P = Λ^{-1/2} Uᵀ` ([`whitening_transform`]);
//! 3. diagonalization of the whitened left-class covariance
//!    `S_left = P C̄_left Pᵀ = B Λ_left Bᵀ`; because
//!    `S_left + S_right = I`, both classes share eigenvectors and
//!    `Λ_left + Λ_right = I`;
//! 4. spatial filters `W = Bᵀ P` (rows), spatial patterns `W⁻¹` (columns).
//!
//! Rows are ordered by left-class eigenvalue, descending: the first filter
//! maximizes left-trial variance, the last maximizes right-trial variance.
//! A fitted [`CspModel`] keeps the `m` first and `m` last rows and exposes
//! log-variance features ([`csp_features`]) for classification.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::signal_model::{Label, Montage};

/// Trace-normalized spatial covariance (channels × channels, symmetric PSD).
pub type SpatialCovariance = DMatrix<f64>;

/// Log-variance feature vector of length `2m`.
pub type FeatureVector = DVector<f64>;

/// Relative eigenvalue floor used when whitening: eigenvalues below
/// `floor × λ_max` make the composite covariance effectively rank-deficient.
pub const DEFAULT_EIG_FLOOR: f64 = 1e-10;

/// Failures in covariance estimation or the CSP decomposition.
#[derive(Debug, Error)]
pub enum CspError {
    #[error("degenerate trial: {0}")]
    DegenerateTrial(String),
    #[error("class has no trials")]
    EmptyClass,
    #[error(
        "composite covariance is rank-deficient: eigenvalue {value:.3e} at index {index} \
         is below {floor:.1e} x lambda_max"
    )]
    RankDeficient { index: usize, value: f64, floor: f64 },
    #[error("m = {m} keeps 2m = {keep} filters but only {channels} channels exist")]
    MTooLarge { m: usize, keep: usize, channels: usize },
    #[error("shape mismatch: expected {expected}, got {got} ({what})")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("window too short: {samples} samples for {channels} channels (need T >= N)")]
    WindowTooShort { channels: usize, samples: usize },
}

impl CspError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            CspError::RankDeficient { .. } | CspError::DegenerateTrial(_) => {
                ErrorCategory::Numerical
            }
            _ => ErrorCategory::Data,
        }
    }
}

/// Tunables for the decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CspOptions {
    /// Diagonal shrinkage γ applied to the composite covariance before
    /// whitening: `Cc ← (1−γ)·Cc + γ·(tr(Cc)/N)·I`. Default 0 (off).
    pub shrinkage: f64,
    /// Relative eigenvalue floor for [`whitening_transform`].
    pub eig_floor: f64,
}

impl Default for CspOptions {
    fn default() -> Self {
        CspOptions { shrinkage: 0.0, eig_floor: DEFAULT_EIG_FLOOR }
    }
}

/// Estimates the trace-normalized spatial covariance of one trial window
/// (channels × samples): `C = E Eᵀ / tr(E Eᵀ)`.
///
/// Trace normalization makes the estimate invariant to global amplitude
/// scaling, which is what lets log-variance features compare across trials.
pub fn trial_covariance(window: &DMatrix<f64>) -> Result<SpatialCovariance, CspError> {
    let (n, t) = window.shape();
    if t < n {
        return Err(CspError::WindowTooShort { channels: n, samples: t });
    }
    let mut c = window * window.transpose();
    let trace = c.trace();
    if !trace.is_finite() || trace <= 0.0 {
        return Err(CspError::DegenerateTrial(format!(
            "covariance trace {trace} (all-zero or non-finite window)"
        )));
    }
    c /= trace;
    // Enforce exact symmetry against accumulation-order noise.
    symmetrize(&mut c);
    Ok(c)
}

/// Arithmetic mean of per-trial covariances.
pub fn class_mean_covariance(covs: &[SpatialCovariance]) -> Result<SpatialCovariance, CspError> {
    let first = covs.first().ok_or(CspError::EmptyClass)?;
    let n = first.nrows();
    let mut mean = DMatrix::zeros(n, n);
    for c in covs {
        if c.nrows() != n || c.ncols() != n {
            return Err(CspError::ShapeMismatch {
                what: "covariance size",
                expected: n,
                got: c.nrows(),
            });
        }
        mean += c;
    }
    mean /= covs.len() as f64;
    Ok(mean)
}

/// Whitening transform of a composite covariance: `P = Λ^{-1/2} Uᵀ` so that
/// `P Cc Pᵀ = I`. Fails with `RankDeficient` if any eigenvalue falls below
/// [`DEFAULT_EIG_FLOOR`] × λ_max.
pub fn whitening_transform(cc: &SpatialCovariance) -> Result<DMatrix<f64>, CspError> {
    whitening_with_floor(cc, DEFAULT_EIG_FLOOR)
}

fn whitening_with_floor(cc: &SpatialCovariance, floor: f64) -> Result<DMatrix<f64>, CspError> {
    let (vals, vecs) = sorted_symmetric_eigen(cc);
    let lambda_max = vals[0];
    if !(lambda_max.is_finite() && lambda_max > 0.0) {
        return Err(CspError::DegenerateTrial(format!(
            "largest composite eigenvalue is {lambda_max}"
        )));
    }
    for (i, &v) in vals.iter().enumerate() {
        if v < floor * lambda_max {
            return Err(CspError::RankDeficient { index: i, value: v, floor });
        }
    }
    // Rows of P are eigenvectors scaled by λ^{-1/2}.
    let mut p = vecs.transpose();
    for (i, &v) in vals.iter().enumerate() {
        let scale = 1.0 / v.sqrt();
        p.row_mut(i).scale_mut(scale);
    }
    Ok(p)
}

/// Full CSP decomposition (all `N` filters, before feature selection).
#[derive(Debug, Clone, PartialEq)]
pub struct CspDecomposition {
    /// `N × N`; row `i` is spatial filter `i`.
    pub filters: DMatrix<f64>,
    /// `N × N`; column `i` is the spatial pattern (scalp field) of filter `i`.
    pub patterns: DMatrix<f64>,
    /// Variance of whitened left-class data along each filter, descending.
    pub eigvals_left: DVector<f64>,
    /// Right-class counterpart; `eigvals_left + eigvals_right = 1` row-wise.
    pub eigvals_right: DVector<f64>,
}

/// Runs the CSP decomposition on two class-mean covariances.
pub fn csp_decompose(
    mean_left: &SpatialCovariance,
    mean_right: &SpatialCovariance,
    opts: &CspOptions,
) -> Result<CspDecomposition, CspError> {
    let n = mean_left.nrows();
    if mean_right.nrows() != n || mean_left.ncols() != n || mean_right.ncols() != n {
        return Err(CspError::ShapeMismatch {
            what: "class covariance size",
            expected: n,
            got: mean_right.nrows(),
        });
    }

    let mut cc = mean_left + mean_right;
    if opts.shrinkage > 0.0 {
        let gamma = opts.shrinkage;
        let mu = cc.trace() / n as f64;
        cc *= 1.0 - gamma;
        for i in 0..n {
            cc[(i, i)] += gamma * mu;
        }
    }

    let p = whitening_with_floor(&cc, opts.eig_floor)?;

    // Whitened left-class covariance; symmetrize before the eigensolver.
    let mut s_left = &p * mean_left * p.transpose();
    symmetrize(&mut s_left);
    let (vals_left, b) = sorted_symmetric_eigen(&s_left);

    let mut s_right = &p * mean_right * p.transpose();
    symmetrize(&mut s_right);

    let mut filters = b.transpose() * &p;

    // Patterns are columns of W⁻¹ = P⁻¹ B = U Λ^{1/2} B, but the numerically
    // cleanest route uses the whitening identity: W Cc Wᵀ = I, hence
    // W⁻¹ = Cc Wᵀ.
    let mut patterns = &cc * filters.transpose();

    // Right-class eigenvalues along the shared basis.
    let eigvals_right = DVector::from_fn(n, |i, _| {
        let bi = b.column(i);
        (&s_right * bi).dot(&bi)
    });

    // Sign convention: the largest-magnitude entry of each filter row is
    // positive; pattern columns flip alongside to keep W · W⁻¹ = I.
    for i in 0..n {
        let row = filters.row(i);
        let mut j_max = 0;
        for j in 1..n {
            if row[j].abs() > row[j_max].abs() {
                j_max = j;
            }
        }
        if row[j_max] < 0.0 {
            filters.row_mut(i).neg_mut();
            patterns.column_mut(i).neg_mut();
        }
    }

    Ok(CspDecomposition {
        filters,
        patterns,
        eigvals_left: DVector::from_vec(vals_left),
        eigvals_right,
    })
}

/// Fit metadata carried by a [`CspModel`] for provenance and compatibility
/// checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub n_left: usize,
    pub n_right: usize,
    /// Analysis window in seconds from trial start.
    pub window_s: (f64, f64),
    pub fs: f64,
    pub shrinkage: f64,
}

/// Context a fit needs to produce a self-describing model.
#[derive(Debug, Clone)]
pub struct FitContext {
    pub montage: Montage,
    pub band: (f64, f64),
    pub window_s: (f64, f64),
    pub fs: f64,
}

/// A fitted CSP feature extractor: the `m` most-left and `m` most-right
/// discriminative filters plus everything needed to apply and audit them.
#[derive(Debug, Clone, PartialEq)]
pub struct CspModel {
    pub montage: Montage,
    /// Band-pass (lo, hi) in Hz the model was trained on.
    pub band: (f64, f64),
    /// Filter pairs retained per side.
    pub m: usize,
    /// `2m × N`: rows 0..m maximize left-class variance, rows m..2m
    /// right-class variance (in order of decreasing extremity).
    pub filters: DMatrix<f64>,
    /// `N × 2m`: scalp pattern for each retained filter.
    pub patterns: DMatrix<f64>,
    /// Left-class eigenvalue of each retained filter.
    pub eigvals_left: Vec<f64>,
    /// Class maximized by the first retained row and by the last.
    pub class_order: (Label, Label),
    pub fit_meta: FitMeta,
}

impl CspModel {
    /// Number of channels the model expects.
    pub fn n_channels(&self) -> usize {
        self.filters.ncols()
    }

    /// Feature dimension `2m`.
    pub fn n_features(&self) -> usize {
        2 * self.m
    }
}

/// Fits a [`CspModel`] from per-class trial windows (each channels × samples).
pub fn csp_fit(
    left_windows: &[DMatrix<f64>],
    right_windows: &[DMatrix<f64>],
    m: usize,
    opts: &CspOptions,
    ctx: &FitContext,
) -> Result<CspModel, CspError> {
    if left_windows.is_empty() || right_windows.is_empty() {
        return Err(CspError::EmptyClass);
    }
    let covs = |windows: &[DMatrix<f64>]| -> Result<Vec<SpatialCovariance>, CspError> {
        windows.iter().map(trial_covariance).collect()
    };
    let mean_left = class_mean_covariance(&covs(left_windows)?)?;
    let mean_right = class_mean_covariance(&covs(right_windows)?)?;
    let decomposition = csp_decompose(&mean_left, &mean_right, opts)?;
    select_filters(
        &decomposition,
        m,
        opts,
        ctx,
        left_windows.len(),
        right_windows.len(),
    )
}

/// Reduces a full decomposition to the `2m` retained filters of a model.
pub fn select_filters(
    dec: &CspDecomposition,
    m: usize,
    opts: &CspOptions,
    ctx: &FitContext,
    n_left: usize,
    n_right: usize,
) -> Result<CspModel, CspError> {
    let n = dec.filters.nrows();
    if m == 0 || 2 * m > n {
        return Err(CspError::MTooLarge { m, keep: 2 * m, channels: n });
    }
    let picked: Vec<usize> = (0..m).chain(n - m..n).collect();
    let mut filters = DMatrix::zeros(2 * m, n);
    let mut patterns = DMatrix::zeros(n, 2 * m);
    let mut eigvals_left = Vec::with_capacity(2 * m);
    for (row, &i) in picked.iter().enumerate() {
        filters.row_mut(row).copy_from(&dec.filters.row(i));
        patterns.column_mut(row).copy_from(&dec.patterns.column(i));
        eigvals_left.push(dec.eigvals_left[i]);
    }
    Ok(CspModel {
        montage: ctx.montage.clone(),
        band: ctx.band,
        m,
        filters,
        patterns,
        eigvals_left,
        class_order: (Label::Left, Label::Right),
        fit_meta: FitMeta {
            n_left,
            n_right,
            window_s: ctx.window_s,
            fs: ctx.fs,
            shrinkage: opts.shrinkage,
        },
    })
}

/// Projects a trial window through the retained filters and returns
/// normalized log-variance features:
/// `f_p = ln( var(Z_p) / Σ_i var(Z_i) )` with `Z = F · E`.
///
/// Variance here is the mean square (no mean subtraction): the input is
/// band-passed EEG, already zero-mean by construction.
pub fn csp_features(model: &CspModel, window: &DMatrix<f64>) -> Result<FeatureVector, CspError> {
    let n = model.n_channels();
    if window.nrows() != n {
        return Err(CspError::ShapeMismatch {
            what: "window channels",
            expected: n,
            got: window.nrows(),
        });
    }
    if window.ncols() == 0 {
        return Err(CspError::WindowTooShort { channels: n, samples: 0 });
    }
    let z = &model.filters * window;
    let t = window.ncols() as f64;
    let vars = DVector::from_fn(z.nrows(), |p, _| z.row(p).iter().map(|v| v * v).sum::<f64>() / t);
    log_ratio_features(vars)
}

/// Equivalent of [`csp_features`] computed from a precomputed trial
/// covariance: `var(Z_p) ∝ f_p C f_pᵀ` and the trace normalization cancels
/// in the ratio. Used by cross-validation to avoid re-projecting raw samples
/// for every fold.
pub fn features_from_covariance(
    model: &CspModel,
    cov: &SpatialCovariance,
) -> Result<FeatureVector, CspError> {
    let n = model.n_channels();
    if cov.nrows() != n || cov.ncols() != n {
        return Err(CspError::ShapeMismatch {
            what: "covariance size",
            expected: n,
            got: cov.nrows(),
        });
    }
    let fc = &model.filters * cov * model.filters.transpose();
    let vars = DVector::from_fn(fc.nrows(), |p, _| fc[(p, p)]);
    log_ratio_features(vars)
}

fn log_ratio_features(vars: DVector<f64>) -> Result<FeatureVector, CspError> {
    let total: f64 = vars.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(CspError::DegenerateTrial(format!(
            "total projected variance {total}"
        )));
    }
    if vars.iter().any(|&v| v <= 0.0) {
        return Err(CspError::DegenerateTrial(
            "a projected component has zero variance".into(),
        ));
    }
    Ok(vars.map(|v| (v / total).ln()))
}

/// Symmetric eigendecomposition with eigenvalues sorted descending.
/// Returns (values, matrix whose columns are the matching eigenvectors).
fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.column_mut(col).copy_from(&eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
