//! JSON persistence for trained CSP + LDA model pairs.
//!
//! A model file is a single self-describing JSON document: montage with
//! coordinates, band and window, spatial filters and patterns (row-major),
//! eigenvalues, LDA weights, and the fit bookkeeping. Numbers are written
//! through `serde_json`, which round-trips `f64` exactly, so save → load →
//! save is byte-stable apart from any caller-added provenance block.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lda::LdaModel;
use super::ClassifierError;
use crate::csp::{CspModel, FitMeta};
use crate::signal_model::{ChannelPos, Label, Montage};

/// Identifies the document type inside the JSON file.
pub const MODEL_FORMAT: &str = "miep-model";
/// Bumped on any incompatible change to the document layout.
pub const MODEL_VERSION: u32 = 1;

/// A complete trained pipeline: feature extractor, classifier, and the
/// band-pass design order needed to reproduce the front-end filter.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub csp: CspModel,
    pub lda: LdaModel,
    /// Butterworth order of the band-pass front end.
    pub filter_order: usize,
}

/// Flat serde image of [`TrainedModel`]. Kept separate from the in-memory
/// types so matrix layout and label spelling in the file are explicit.
#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    format: String,
    version: u32,
    montage: Vec<ChannelDoc>,
    band_hz: (f64, f64),
    window_s: (f64, f64),
    fs: f64,
    m: usize,
    /// Row-major `2m × N`.
    filters: Vec<Vec<f64>>,
    /// Row-major `N × 2m`.
    patterns: Vec<Vec<f64>>,
    eigvals_left: Vec<f64>,
    class_order: (String, String),
    n_left: usize,
    n_right: usize,
    csp_shrinkage: f64,
    lda: LdaDoc,
    filter_order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChannelDoc {
    name: String,
    x: f64,
    y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct LdaDoc {
    weights: Vec<f64>,
    bias: f64,
    positive: String,
    negative: String,
    shrinkage: f64,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn rows_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, ClassifierError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(ClassifierError::ModelFormat(format!("{what} matrix is empty or ragged")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

fn parse_label(s: &str, what: &str) -> Result<Label, ClassifierError> {
    Label::parse(s)
        .map_err(|_| ClassifierError::ModelFormat(format!("{what}: unknown label {s:?}")))
}

fn to_doc(model: &TrainedModel, provenance: Option<serde_json::Value>) -> ModelDoc {
    ModelDoc {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        montage: model
            .csp
            .montage
            .channels()
            .iter()
            .map(|c| ChannelDoc { name: c.name.clone(), x: c.x, y: c.y })
            .collect(),
        band_hz: model.csp.band,
        window_s: model.csp.fit_meta.window_s,
        fs: model.csp.fit_meta.fs,
        m: model.csp.m,
        filters: matrix_rows(&model.csp.filters),
        patterns: matrix_rows(&model.csp.patterns),
        eigvals_left: model.csp.eigvals_left.clone(),
        class_order: (
            model.csp.class_order.0.as_str().to_string(),
            model.csp.class_order.1.as_str().to_string(),
        ),
        n_left: model.csp.fit_meta.n_left,
        n_right: model.csp.fit_meta.n_right,
        csp_shrinkage: model.csp.fit_meta.shrinkage,
        lda: LdaDoc {
            weights: model.lda.weights.iter().copied().collect(),
            bias: model.lda.bias,
            positive: model.lda.positive.as_str().to_string(),
            negative: model.lda.negative.as_str().to_string(),
            shrinkage: model.lda.shrinkage,
        },
        filter_order: model.filter_order,
        provenance,
    }
}

fn from_doc(doc: ModelDoc) -> Result<TrainedModel, ClassifierError> {
    if doc.format != MODEL_FORMAT {
        return Err(ClassifierError::ModelFormat(format!(
            "expected format {MODEL_FORMAT:?}, found {:?}",
            doc.format
        )));
    }
    if doc.version != MODEL_VERSION {
        return Err(ClassifierError::ModelFormat(format!(
            "unsupported model version {} (supported: {MODEL_VERSION})",
            doc.version
        )));
    }
    let montage = Montage::new(
        doc.montage
            .iter()
            .map(|c| ChannelPos { name: c.name.clone(), x: c.x, y: c.y })
            .collect(),
    );
    let filters = rows_matrix(&doc.filters, "filters")?;
    let patterns = rows_matrix(&doc.patterns, "patterns")?;
    let n = montage.len();
    if filters.ncols() != n || patterns.nrows() != n || filters.nrows() != 2 * doc.m {
        return Err(ClassifierError::ModelFormat(format!(
            "inconsistent shapes: {} channels, {}x{} filters, {}x{} patterns, m={}",
            n,
            filters.nrows(),
            filters.ncols(),
            patterns.nrows(),
            patterns.ncols(),
            doc.m
        )));
    }
    if doc.lda.weights.len() != 2 * doc.m {
        return Err(ClassifierError::ModelFormat(format!(
            "LDA expects {} features, document has {} weights",
            2 * doc.m,
            doc.lda.weights.len()
        )));
    }
    let csp = CspModel {
        montage,
        band: doc.band_hz,
        m: doc.m,
        filters,
        patterns,
        eigvals_left: doc.eigvals_left,
        class_order: (
            parse_label(&doc.class_order.0, "class_order")?,
            parse_label(&doc.class_order.1, "class_order")?,
        ),
        fit_meta: FitMeta {
            n_left: doc.n_left,
            n_right: doc.n_right,
            window_s: doc.window_s,
            fs: doc.fs,
            shrinkage: doc.csp_shrinkage,
        },
    };
    let lda = LdaModel {
        weights: DVector::from_vec(doc.lda.weights),
        bias: doc.lda.bias,
        positive: parse_label(&doc.lda.positive, "lda.positive")?,
        negative: parse_label(&doc.lda.negative, "lda.negative")?,
        shrinkage: doc.lda.shrinkage,
    };
    Ok(TrainedModel { csp, lda, filter_order: doc.filter_order })
}

/// Serializes a model (plus optional provenance block) to a JSON value.
pub fn model_to_json(
    model: &TrainedModel,
    provenance: Option<serde_json::Value>,
) -> serde_json::Value {
    serde_json::to_value(to_doc(model, provenance)).expect("model serialization is infallible")
}

/// Reconstructs a model from a JSON value, validating format and shapes.
pub fn model_from_json(value: serde_json::Value) -> Result<TrainedModel, ClassifierError> {
    let doc: ModelDoc = serde_json::from_value(value)
        .map_err(|e| ClassifierError::ModelFormat(e.to_string()))?;
    from_doc(doc)
}

/// Writes a model to `path` as pretty-printed JSON.
pub fn save_model(
    path: &Path,
    model: &TrainedModel,
    provenance: Option<serde_json::Value>,
) -> Result<(), ClassifierError> {
    let file = File::create(path).map_err(|e| ClassifierError::ModelFormat(e.to_string()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &to_doc(model, provenance))
        .map_err(|e| ClassifierError::ModelFormat(e.to_string()))?;
    w.write_all(b"\n").map_err(|e| ClassifierError::ModelFormat(e.to_string()))?;
    Ok(())
}

/// Reads a model written by [`save_model`].
pub fn load_model(path: &Path) -> Result<TrainedModel, ClassifierError> {
    let file = File::open(path).map_err(|e| ClassifierError::ModelFormat(e.to_string()))?;
    let doc: ModelDoc = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| ClassifierError::ModelFormat(e.to_string()))?;
    from_doc(doc)
}
