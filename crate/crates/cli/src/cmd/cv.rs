//! `miep cv` — repeated stratified cross-validation with the full pipeline
//! (including the spatial-filter fit) refit inside every training fold.
//!
//! Writes a JSON report (`{provenance, report}`) and optionally a CSV with
//! one `repetition,fold,accuracy` row per fold.

use std::path::PathBuf;

use clap::Args;
use miep_core::classifier::{cross_validate, CvConfig, CvReport};

use crate::cmd::PipelineFlags;
use crate::errors::CliError;
use crate::provenance::Provenance;
use crate::util;

#[derive(Debug, Args)]
pub struct CvArgs {
    /// Input dataset (binary container or CSV directory).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Output JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Stratified folds per repetition.
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Shuffle repetitions.
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// RNG seed for the fold shuffles; omitted means 0, announced.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
    /// Also write per-fold accuracies as CSV.
    #[arg(long, value_name = "PATH")]
    pub csv_out: Option<PathBuf>,
}

fn fold_csv(report: &CvReport) -> String {
    let mut out = String::from("repetition,fold,accuracy\n");
    for (r, rep) in report.fold_accuracies.iter().enumerate() {
        for (f, acc) in rep.iter().enumerate() {
            out.push_str(&format!("{r},{f},{acc}\n"));
        }
    }
    out
}

pub fn run(a: CvArgs) -> Result<(), CliError> {
    let seed = util::effective_seed(a.seed);
    let pipeline = a.pipeline.to_config()?;
    let cfg = CvConfig { folds: a.folds, repetitions: a.reps, seed, pipeline };

    let set = util::load_dataset(&a.input)?;
    let report = cross_validate(&set, &cfg)?;

    let mut pairs = vec![
        ("in", a.input.display().to_string()),
        ("out", a.out.display().to_string()),
        ("folds", a.folds.to_string()),
        ("reps", a.reps.to_string()),
        ("seed", seed.to_string()),
    ];
    pairs.extend(a.pipeline.provenance_pairs(&pipeline));
    if let Some(p) = &a.csv_out {
        pairs.push(("csv-out", p.display().to_string()));
    }
    let prov = Provenance::new("cv", Some(seed), pairs);

    let doc = serde_json::json!({
        "provenance": prov.to_value(),
        "report": report,
    });
    util::write_json(&a.out, &doc)?;
    if let Some(p) = &a.csv_out {
        util::write_text(p, &fold_csv(&report))?;
    }

    println!(
        "cv accuracy {:.4} ± {:.4} ({} folds × {} reps, {} trials) -> {}",
        report.mean_accuracy,
        report.std_accuracy,
        report.folds,
        report.repetitions,
        report.n_trials,
        a.out.display()
    );
    Ok(())
}
