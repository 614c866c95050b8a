//! `miep patterns` — scalp maps of the spatial patterns of a trained model.
//!
//! Writes `{provenance, maps: [...]}` JSON where each map lists
//! `{channel, x, y, weight}` records per electrode; `--csv-dir` additionally
//! writes one plot-ready CSV per retained filter.

use std::path::PathBuf;

use clap::Args;
use miep_core::classifier::load_model;
use miep_core::spectral::{pattern_map, PatternMap};

use crate::errors::CliError;
use crate::provenance::Provenance;
use crate::util;

#[derive(Debug, Args)]
pub struct PatternsArgs {
    /// Trained model document.
    #[arg(long)]
    pub model: PathBuf,
    /// Output JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Only the map of this filter index (default: all 2m retained filters).
    #[arg(long)]
    pub index: Option<usize>,
    /// Also write one `pattern_<index>.csv` per map into this directory.
    #[arg(long, value_name = "DIR")]
    pub csv_dir: Option<PathBuf>,
}

pub fn run(a: PatternsArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let indices: Vec<usize> = match a.index {
        Some(i) => vec![i],
        None => (0..model.csp.n_features()).collect(),
    };
    let maps: Vec<PatternMap> = indices
        .iter()
        .map(|&i| pattern_map(&model.csp, i))
        .collect::<Result<_, _>>()?;

    let mut pairs = vec![
        ("model", a.model.display().to_string()),
        ("out", a.out.display().to_string()),
    ];
    if let Some(i) = a.index {
        pairs.push(("index", i.to_string()));
    }
    if let Some(d) = &a.csv_dir {
        pairs.push(("csv-dir", d.display().to_string()));
    }
    let prov = Provenance::new("patterns", None, pairs);

    let doc = serde_json::json!({
        "provenance": prov.to_value(),
        "maps": maps,
    });
    util::write_json(&a.out, &doc)?;

    if let Some(dir) = &a.csv_dir {
        std::fs::create_dir_all(dir)?;
        for map in &maps {
            util::write_text(&dir.join(format!("pattern_{}.csv", map.filter_index)), &map.to_csv())?;
        }
    }

    let dominant: Vec<String> = maps
        .iter()
        .map(|m| format!("{}:{}", m.filter_index, m.dominant_channel()))
        .collect();
    println!(
        "wrote {} map(s), dominant electrodes [{}] -> {}",
        maps.len(),
        dominant.join(", "),
        a.out.display()
    );
    Ok(())
}
