//! `miep gen` — synthesize a lateralized motor-imagery dataset.
//!
//! Writes the dataset (binary container, or CSV directory with `--csv`) plus
//! two sidecars: `<out>.truth.json` with the generator's ground-truth record
//! and `<out>.provenance.json` with the canonical configuration.

use std::path::PathBuf;

use clap::Args;
use miep_core::synthgen::{generate_dataset, ground_truth, GenParams};

use crate::errors::CliError;
use crate::provenance::Provenance;
use crate::util;

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Trials per class (Left and Right each get this many).
    #[arg(long, default_value_t = 60)]
    pub trials: usize,
    /// Sampling rate in Hz.
    #[arg(long, default_value_t = 256.0)]
    pub fs: f64,
    /// Trial length in seconds.
    #[arg(long, default_value_t = 8.0)]
    pub trial_s: f64,
    /// Cue onset in seconds; rhythm attenuation starts here.
    #[arg(long, default_value_t = 2.0)]
    pub cue_s: f64,
    /// Fractional amplitude reduction of the attenuated source, in [0, 1].
    #[arg(long, default_value_t = 0.8)]
    pub erd_depth: f64,
    /// Mu-rhythm frequency in Hz.
    #[arg(long, default_value_t = 10.0)]
    pub mu_hz: f64,
    /// Beta-rhythm frequency in Hz.
    #[arg(long, default_value_t = 20.0)]
    pub beta_hz: f64,
    /// Rhythm-to-background RMS ratio at the source electrode, in dB.
    #[arg(long, default_value_t = 6.0)]
    pub snr_db: f64,
    /// Gaussian spatial falloff scale of source mixing, in coordinate units.
    #[arg(long, default_value_t = 0.25)]
    pub source_spread: f64,
    /// RNG seed; omitted means 0, announced with a notice.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path (binary container, or CSV directory with --csv).
    #[arg(long)]
    pub out: PathBuf,
    /// Write the CSV directory layout instead of the binary container.
    #[arg(long)]
    pub csv: bool,
}

pub fn run(a: GenArgs) -> Result<(), CliError> {
    let seed = util::effective_seed(a.seed);
    let params = GenParams {
        n_trials_per_class: a.trials,
        fs: a.fs,
        trial_s: a.trial_s,
        cue_s: a.cue_s,
        erd_depth: a.erd_depth,
        mu_hz: a.mu_hz,
        beta_hz: a.beta_hz,
        snr_db: a.snr_db,
        source_spread: a.source_spread,
        seed,
    };
    let set = generate_dataset(&params)?;
    let truth = ground_truth(&params)?;

    let prov = Provenance::new(
        "gen",
        Some(seed),
        vec![
            ("trials", a.trials.to_string()),
            ("fs", a.fs.to_string()),
            ("trial-s", a.trial_s.to_string()),
            ("cue-s", a.cue_s.to_string()),
            ("erd-depth", a.erd_depth.to_string()),
            ("mu-hz", a.mu_hz.to_string()),
            ("beta-hz", a.beta_hz.to_string()),
            ("snr-db", a.snr_db.to_string()),
            ("source-spread", a.source_spread.to_string()),
            ("seed", seed.to_string()),
            ("out", a.out.display().to_string()),
            ("csv", a.csv.to_string()),
        ],
    );

    util::save_dataset(&set, &a.out, a.csv)?;
    prov.write_sidecar(&a.out)?;
    let truth_doc = serde_json::json!({
        "provenance": prov.to_value(),
        "ground_truth": truth,
    });
    util::write_json(&util::suffixed_path(&a.out, "truth.json"), &truth_doc)?;

    println!(
        "wrote {} trials ({} per class, {} channels, {} Hz) to {}",
        set.len(),
        a.trials,
        set.montage().len(),
        set.fs(),
        a.out.display()
    );
    Ok(())
}
