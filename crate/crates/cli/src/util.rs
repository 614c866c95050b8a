//! Shared flag parsing and artifact I/O helpers.

use std::fs;
use std::path::{Path, PathBuf};

use miep_core::signal_model::{
    load_epochs, load_epochs_csv, save_epochs, save_epochs_csv, EpochSet, Label,
};

use crate::errors::CliError;

/// Parses a `LO:HI` pair of numbers (used for bands, windows, intervals).
pub fn parse_pair(s: &str, flag: &str) -> Result<(f64, f64), CliError> {
    let err = || CliError::usage(format!("{flag} expects LO:HI (e.g. 8:30), got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(err)?;
    let lo: f64 = lo.trim().parse().map_err(|_| err())?;
    let hi: f64 = hi.trim().parse().map_err(|_| err())?;
    Ok((lo, hi))
}

/// Renders a pair back into the canonical `LO:HI` flag syntax.
pub fn pair_str(p: (f64, f64)) -> String {
    format!("{}:{}", p.0, p.1)
}

/// Parses `left` / `right` / `unlabeled` class names.
pub fn parse_class(s: &str) -> Result<Label, CliError> {
    Label::parse(s)
        .map_err(|_| CliError::usage(format!("--class expects left|right|unlabeled, got `{s}`")))
}

/// Resolves an optional seed: defaulting is allowed but announced, so a
/// silent 0 can never masquerade as a deliberately chosen seed.
pub fn effective_seed(seed: Option<u64>) -> u64 {
    match seed {
        Some(s) => s,
        None => {
            eprintln!("miep: note: --seed not given; defaulting to seed 0");
            0
        }
    }
}

/// Loads a dataset: a directory is read as the CSV layout, anything else as
/// the binary container.
pub fn load_dataset(path: &Path) -> Result<EpochSet, CliError> {
    if path.is_dir() {
        Ok(load_epochs_csv(path)?)
    } else {
        Ok(load_epochs(path)?)
    }
}

/// Saves a dataset in the requested format.
pub fn save_dataset(set: &EpochSet, path: &Path, csv: bool) -> Result<(), CliError> {
    if csv {
        save_epochs_csv(set, path)?;
    } else {
        save_epochs(set, path)?;
    }
    Ok(())
}

/// `<path>.<suffix>`, e.g. `data.miep` → `data.miep.truth.json`.
pub fn suffixed_path(path: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}.{suffix}", path.display()))
}

/// Writes pretty-printed JSON with a trailing newline, creating parent
/// directories as needed.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always render");
    text.push('\n');
    write_text(path, &text)
}

/// Writes text, creating parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_text_bytes(path, text.as_bytes())
}

/// Writes raw bytes, creating parent directories as needed.
pub fn write_text_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_parsing_round_trips_and_rejects() {
        assert_eq!(parse_pair("8:30", "--band").unwrap(), (8.0, 30.0));
        assert_eq!(parse_pair(" 2.5 : 6 ", "--window").unwrap(), (2.5, 6.0));
        assert_eq!(pair_str((8.0, 30.0)), "8:30");
        for bad in ["8", "8-30", "a:30", "8:"] {
            let e = parse_pair(bad, "--band").unwrap_err();
            assert_eq!(e.exit_code(), 2, "{bad}");
        }
    }

    #[test]
    fn class_names_parse_case_insensitively() {
        assert_eq!(parse_class("Left").unwrap(), Label::Left);
        assert_eq!(parse_class("right").unwrap(), Label::Right);
        assert!(parse_class("both").is_err());
    }
}
