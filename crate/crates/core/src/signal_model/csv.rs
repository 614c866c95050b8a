//! Human-inspectable CSV directory layout.
//!
//! A dataset directory contains one `meta.json` (format version, sampling
//! rate, montage with coordinates, provenance) plus one CSV file per trial:
//!
//! ```text
//! meta.json
//! trial_00000_left.csv
//! trial_00001_right.csv
//! trial_00002_unlabeled.csv
//! ...
//! ```
//!
//! Trial files carry a header row with the channel names followed by one row
//! per channel (row `i` = samples of channel `i`). The class label is encoded
//! in the filename suffix. Floats are written with Rust's shortest
//! round-trip formatting, so values are recovered exactly on load.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ChannelPos, DataError, Epoch, EpochSet, Label, Montage};

/// Sidecar metadata written next to the trial files.
#[derive(Debug, Serialize, Deserialize)]
struct CsvMeta {
    format: String,
    version: u32,
    fs: f64,
    n_trials: usize,
    channels: Vec<ChannelPos>,
    provenance: String,
}

const CSV_FORMAT: &str = "miep-csv";
const CSV_VERSION: u32 = 1;

fn trial_file_name(idx: usize, label: Label) -> String {
    format!("trial_{idx:05}_{}.csv", label.as_str())
}

/// Writes `set` as a CSV directory at `dir` (created if absent).
pub fn save_epochs_csv<P: AsRef<Path>>(set: &EpochSet, dir: P) -> Result<(), DataError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let meta = CsvMeta {
        format: CSV_FORMAT.to_string(),
        version: CSV_VERSION,
        fs: set.fs(),
        n_trials: set.len(),
        channels: set.montage().channels().to_vec(),
        provenance: set.provenance().to_string(),
    };
    let meta_json = serde_json::to_string_pretty(&meta)
        .map_err(|e| DataError::MalformedHeader(format!("meta serialization failed: {e}")))?;
    fs::write(dir.join("meta.json"), meta_json)?;

    for (idx, e) in set.epochs().iter().enumerate() {
        let mut w = BufWriter::new(fs::File::create(dir.join(trial_file_name(idx, e.label)))?);
        writeln!(w, "{}", set.montage().names().join(","))?;
        for c in 0..e.n_channels() {
            let row: Vec<String> = (0..e.n_samples()).map(|s| e.data[(c, s)].to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Loads a CSV directory written by [`save_epochs_csv`].
pub fn load_epochs_csv<P: AsRef<Path>>(dir: P) -> Result<EpochSet, DataError> {
    let dir = dir.as_ref();
    let meta_raw = fs::read_to_string(dir.join("meta.json"))?;
    let meta: CsvMeta = serde_json::from_str(&meta_raw)
        .map_err(|e| DataError::MalformedHeader(format!("bad meta.json: {e}")))?;
    if meta.format != CSV_FORMAT || meta.version != CSV_VERSION {
        return Err(DataError::MalformedHeader(format!(
            "unsupported CSV dataset `{}` v{} (supported: `{CSV_FORMAT}` v{CSV_VERSION})",
            meta.format, meta.version
        )));
    }
    let montage = Montage::new(meta.channels);

    let mut epochs = Vec::with_capacity(meta.n_trials);
    for idx in 0..meta.n_trials {
        let candidates: Vec<Label> = vec![Label::Left, Label::Right, Label::Unlabeled];
        let (path, label) = candidates
            .into_iter()
            .map(|l| (dir.join(trial_file_name(idx, l)), l))
            .find(|(p, _)| p.exists())
            .ok_or_else(|| {
                DataError::MalformedHeader(format!("missing trial file for index {idx}"))
            })?;
        epochs.push(load_trial_csv(&path, idx, label, &montage, meta.fs)?);
    }

    EpochSet::new(montage, meta.fs, epochs, meta.provenance)
}

fn load_trial_csv(
    path: &Path,
    trial: usize,
    label: Label,
    montage: &Montage,
    fs: f64,
) -> Result<Epoch, DataError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| DataError::MalformedHeader(format!("{}: empty file", path.display())))?;
    let header_names: Vec<&str> = header.split(',').collect();
    if header_names != montage.names() {
        return Err(DataError::MalformedHeader(format!(
            "{}: header channels do not match montage",
            path.display()
        )));
    }

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(montage.len());
    for (c, line) in lines.enumerate() {
        let mut row = Vec::new();
        for (s, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|e| {
                DataError::MalformedHeader(format!(
                    "{}: channel {c}, sample {s}: {e}",
                    path.display()
                ))
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(DataError::ShapeMismatch {
                    trial,
                    what: "samples",
                    expected: first.len(),
                    got: row.len(),
                });
            }
        }
        rows.push(row);
    }
    if rows.len() != montage.len() {
        return Err(DataError::ShapeMismatch {
            trial,
            what: "channels",
            expected: montage.len(),
            got: rows.len(),
        });
    }
    let n_samples = rows.first().map_or(0, Vec::len);
    let data = DMatrix::from_fn(rows.len(), n_samples, |c, s| rows[c][s]);
    Ok(Epoch::new(data, fs, label))
}
