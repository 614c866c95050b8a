//! Core data model: labeled EEG epochs bound to a montage.
//!
//! An [`Epoch`] is one trial's channels × samples matrix with a class label;
//! an [`EpochSet`] bundles epochs with the [`Montage`] and sampling rate and
//! enforces the shape invariants everything downstream relies on. Two
//! persistence formats are provided: a compact binary format ([`save_epochs`]
//! / [`load_epochs`]) and a human-inspectable CSV directory layout
//! ([`save_epochs_csv`] / [`load_epochs_csv`]).

mod binary;
mod csv;
mod montage;

pub use binary::{load_epochs, read_epochs, save_epochs, write_epochs, FORMAT_VERSION, MAGIC};
pub use csv::{load_epochs_csv, save_epochs_csv};
pub use montage::{ChannelPos, Montage};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;

/// Failures while constructing, validating, or (de)serializing epoch data.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("shape mismatch in trial {trial}: expected {expected}, got {got} ({what})")]
    ShapeMismatch {
        trial: usize,
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite sample in trial {trial}, channel {channel}, sample {sample}")]
    NonFiniteSample {
        trial: usize,
        channel: usize,
        sample: usize,
    },
    #[error("sampling-rate mismatch in trial {trial}: set is {expected} Hz, epoch is {got} Hz")]
    RateMismatch { trial: usize, expected: f64, got: f64 },
    #[error("I/O failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

impl DataError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            DataError::IoFailure(_) => ErrorCategory::Io,
            _ => ErrorCategory::Data,
        }
    }
}

/// Trial class label. The binary encoding is fixed: Left = −1, Unlabeled = 0,
/// Right = +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Left,
    Right,
    Unlabeled,
}

impl Label {
    pub fn to_i8(self) -> i8 {
        match self {
            Label::Left => -1,
            Label::Unlabeled => 0,
            Label::Right => 1,
        }
    }

    pub fn from_i8(v: i8) -> Result<Self, DataError> {
        match v {
            -1 => Ok(Label::Left),
            0 => Ok(Label::Unlabeled),
            1 => Ok(Label::Right),
            other => Err(DataError::MalformedHeader(format!(
                "invalid label byte {other} (expected -1, 0, or +1)"
            ))),
        }
    }

    /// Left ↔ Right; Unlabeled maps to itself.
    pub fn opposite(self) -> Self {
        match self {
            Label::Left => Label::Right,
            Label::Right => Label::Left,
            Label::Unlabeled => Label::Unlabeled,
        }
    }

    pub fn is_labeled(self) -> bool {
        !matches!(self, Label::Unlabeled)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Left => "left",
            Label::Right => "right",
            Label::Unlabeled => "unlabeled",
        }
    }

    pub fn parse(s: &str) -> Result<Self, DataError> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Label::Left),
            "right" | "r" => Ok(Label::Right),
            "unlabeled" | "u" => Ok(Label::Unlabeled),
            other => Err(DataError::MalformedHeader(format!("invalid label `{other}`"))),
        }
    }
}

/// Optional per-trial timing annotations (not persisted by the file formats;
/// analysis windows come from pipeline configuration).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetMeta {
    /// Cue onset relative to the first sample, in seconds.
    pub cue_s: f64,
}

/// One trial: a channels × samples matrix plus label and sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    /// Row `i` holds the samples of montage channel `i`.
    pub data: DMatrix<f64>,
    /// Sampling rate in Hz.
    pub fs: f64,
    pub label: Label,
    pub onset_meta: Option<OnsetMeta>,
}

impl Epoch {
    pub fn new(data: DMatrix<f64>, fs: f64, label: Label) -> Self {
        Epoch { data, fs, label, onset_meta: None }
    }

    pub fn n_channels(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    /// Extracts columns `[start_s, end_s)` (times in seconds from the first
    /// sample, mapped to indices by rounding `t * fs`).
    pub fn window(&self, start_s: f64, end_s: f64) -> Result<DMatrix<f64>, DataError> {
        let start = (start_s * self.fs).round() as isize;
        let end = (end_s * self.fs).round() as isize;
        if start < 0 || end <= start || end as usize > self.n_samples() {
            return Err(DataError::ShapeMismatch {
                trial: 0,
                what: "window samples",
                expected: self.n_samples(),
                got: end.max(0) as usize,
            });
        }
        let (start, end) = (start as usize, end as usize);
        Ok(self.data.columns(start, end - start).into_owned())
    }
}

/// A set of epochs sharing one montage and sampling rate.
///
/// Construction enforces: every epoch has `montage.len()` channels, the set's
/// sampling rate, and only finite samples. The fields are private so the
/// invariants cannot be broken afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    montage: Montage,
    fs: f64,
    epochs: Vec<Epoch>,
    provenance: String,
}

impl EpochSet {
    pub fn new(
        montage: Montage,
        fs: f64,
        epochs: Vec<Epoch>,
        provenance: impl Into<String>,
    ) -> Result<Self, DataError> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(DataError::MalformedHeader(format!("invalid sampling rate {fs}")));
        }
        for (t, e) in epochs.iter().enumerate() {
            if e.n_channels() != montage.len() {
                return Err(DataError::ShapeMismatch {
                    trial: t,
                    what: "channels",
                    expected: montage.len(),
                    got: e.n_channels(),
                });
            }
            if e.fs != fs {
                return Err(DataError::RateMismatch { trial: t, expected: fs, got: e.fs });
            }
            for (c, row) in e.data.row_iter().enumerate() {
                for (s, v) in row.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(DataError::NonFiniteSample { trial: t, channel: c, sample: s });
                    }
                }
            }
        }
        Ok(EpochSet { montage, fs, epochs, provenance: provenance.into() })
    }

    pub fn montage(&self) -> &Montage {
        &self.montage
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn epochs(&self) -> &[Epoch] {
        &self.epochs
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn set_provenance(&mut self, provenance: impl Into<String>) {
        self.provenance = provenance.into();
    }

    pub fn labels(&self) -> Vec<Label> {
        self.epochs.iter().map(|e| e.label).collect()
    }

    /// Indices of all epochs carrying `label`.
    pub fn class_indices(&self, label: Label) -> Vec<usize> {
        self.epochs
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Rebuilds the set with replacement epochs (same montage / fs /
    /// provenance); used by per-trial transforms such as filtering.
    pub fn with_epochs(&self, epochs: Vec<Epoch>) -> Result<Self, DataError> {
        EpochSet::new(self.montage.clone(), self.fs, epochs, self.provenance.clone())
    }
}

/// A montage/data consistency problem found by [`validate_montage`].
#[derive(Debug, Clone, PartialEq)]
pub enum MontageViolation {
    DuplicateChannel { name: String },
    CoordOutOfDisc { name: String, radius: f64 },
    NonFiniteSample { trial: usize, channel: usize, sample: usize },
}

impl std::fmt::Display for MontageViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MontageViolation::DuplicateChannel { name } => {
                write!(f, "duplicate channel `{name}`")
            }
            MontageViolation::CoordOutOfDisc { name, radius } => {
                write!(f, "channel `{name}` outside unit disc (radius {radius:.3})")
            }
            MontageViolation::NonFiniteSample { trial, channel, sample } => {
                write!(f, "non-finite sample at trial {trial}, channel {channel}, sample {sample}")
            }
        }
    }
}

/// Audits a set against the montage contract: unique channel names, all
/// coordinates on the unit disc, all samples finite. Returns every violation
/// found (empty = clean).
pub fn validate_montage(set: &EpochSet) -> Vec<MontageViolation> {
    let mut violations = Vec::new();
    let names = set.montage().names();
    for (i, name) in names.iter().enumerate() {
        if names[..i].contains(name) {
            violations.push(MontageViolation::DuplicateChannel { name: name.to_string() });
        }
    }
    for ch in set.montage().channels() {
        let r = ch.radius();
        if r > 1.0 {
            violations.push(MontageViolation::CoordOutOfDisc { name: ch.name.clone(), radius: r });
        }
    }
    for (t, e) in set.epochs().iter().enumerate() {
        'epoch: for (c, row) in e.data.row_iter().enumerate() {
            for (s, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    violations.push(MontageViolation::NonFiniteSample {
                        trial: t,
                        channel: c,
                        sample: s,
                    });
                    break 'epoch; // one report per epoch is enough
                }
            }
        }
    }
    violations
}
