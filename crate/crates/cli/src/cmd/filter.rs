//! `miep filter` — band-pass every trial of a dataset.
//!
//! Defaults to the causal mode legal for online replay; `--zero-phase`
//! selects the forward-backward offline mode. Writes a filtered copy of the
//! dataset plus a `.provenance.json` sidecar.

use std::path::PathBuf;

use clap::Args;
use miep_core::dsp::{design_butterworth_bandpass, filter_set, FilterMode};

use crate::errors::CliError;
use crate::provenance::Provenance;
use crate::util;

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Input dataset (binary container or CSV directory).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Band-pass edges in Hz, as LO:HI.
    #[arg(long, default_value = "8:30", value_name = "LO:HI")]
    pub band: String,
    /// Butterworth design order.
    #[arg(long, default_value_t = 5)]
    pub order: usize,
    /// Forward-backward filtering (offline analysis only).
    #[arg(long)]
    pub zero_phase: bool,
    /// Write the CSV directory layout instead of the binary container.
    #[arg(long)]
    pub csv: bool,
}

pub fn run(a: FilterArgs) -> Result<(), CliError> {
    let band = util::parse_pair(&a.band, "--band")?;
    let set = util::load_dataset(&a.input)?;
    let filter = design_butterworth_bandpass(a.order, band.0, band.1, set.fs())?;
    let mode = if a.zero_phase { FilterMode::ZeroPhase } else { FilterMode::Causal };
    let mut filtered = filter_set(&filter, &set, mode)?;
    filtered.set_provenance(format!(
        "{} | band-pass {}:{} Hz order {} ({})",
        set.provenance(),
        band.0,
        band.1,
        a.order,
        match mode {
            FilterMode::Causal => "causal",
            FilterMode::ZeroPhase => "zero-phase",
        }
    ));

    let prov = Provenance::new(
        "filter",
        None,
        vec![
            ("in", a.input.display().to_string()),
            ("out", a.out.display().to_string()),
            ("band", util::pair_str(band)),
            ("order", a.order.to_string()),
            ("zero-phase", a.zero_phase.to_string()),
            ("csv", a.csv.to_string()),
        ],
    );

    util::save_dataset(&filtered, &a.out, a.csv)?;
    prov.write_sidecar(&a.out)?;

    println!(
        "filtered {} trials to {}:{} Hz (order {}, {}) -> {}",
        filtered.len(),
        band.0,
        band.1,
        a.order,
        if a.zero_phase { "zero-phase" } else { "causal" },
        a.out.display()
    );
    Ok(())
}
