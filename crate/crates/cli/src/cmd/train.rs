//! `miep train` — fit the spatial-filter + discriminant pipeline on every
//! labeled trial of a dataset and persist the model as a versioned JSON
//! document with the canonical provenance embedded.

use std::path::PathBuf;

use clap::Args;
use miep_core::classifier::{save_model, train_models, TrainedModel};

use crate::cmd::PipelineFlags;
use crate::errors::CliError;
use crate::provenance::Provenance;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Input dataset (binary container or CSV directory).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Output model document.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
}

pub fn run(a: TrainArgs) -> Result<(), CliError> {
    let cfg = a.pipeline.to_config()?;
    let set = crate::util::load_dataset(&a.input)?;
    let (csp, lda) = train_models(&set, &cfg)?;
    let model = TrainedModel { csp, lda, filter_order: cfg.order };

    let mut pairs = vec![
        ("in", a.input.display().to_string()),
        ("out", a.out.display().to_string()),
    ];
    pairs.extend(a.pipeline.provenance_pairs(&cfg));
    let prov = Provenance::new("train", None, pairs);

    save_model(&a.out, &model, Some(prov.to_value()))?;

    println!(
        "trained on {} trials ({} left / {} right), kept {} filter pairs -> {}",
        model.csp.fit_meta.n_left + model.csp.fit_meta.n_right,
        model.csp.fit_meta.n_left,
        model.csp.fit_meta.n_right,
        model.csp.m,
        a.out.display()
    );
    Ok(())
}
