//! `miep psd` — class-averaged Welch power spectral density of one channel.
//!
//! Emits a plot-ready CSV: `#`-prefixed metadata lines (channel, class,
//! estimator settings, canonical provenance) followed by `freq_hz,power`
//! rows. With `--band LO:HI` the integrated in-band power is added to the
//! metadata.

use std::path::PathBuf;

use clap::Args;
use miep_core::spectral::{band_power, class_average_psd, WelchConfig};

use crate::errors::CliError;
use crate::provenance::Provenance;
use crate::util;

#[derive(Debug, Args)]
pub struct PsdArgs {
    /// Input dataset (binary container or CSV directory).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Electrode name, e.g. C3.
    #[arg(long)]
    pub channel: String,
    /// Trial class to average: left or right.
    #[arg(long)]
    pub class: String,
    /// Analysis window in seconds from trial start, as LO:HI.
    #[arg(long, default_value = "2.5:6", value_name = "LO:HI")]
    pub window: String,
    /// Welch segment length in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub segment_s: f64,
    /// Fractional overlap between segments, in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
    /// Also report integrated power over this band, as LO:HI.
    #[arg(long, value_name = "LO:HI")]
    pub band: Option<String>,
}

pub fn run(a: PsdArgs) -> Result<(), CliError> {
    let window = util::parse_pair(&a.window, "--window")?;
    let class = util::parse_class(&a.class)?;
    let band = a.band.as_deref().map(|s| util::parse_pair(s, "--band")).transpose()?;
    let welch = WelchConfig { segment_s: a.segment_s, overlap: a.overlap };

    let set = util::load_dataset(&a.input)?;
    let psd = class_average_psd(&set, &a.channel, class, window, &welch)?;
    let in_band = band.map(|(lo, hi)| band_power(&psd, lo, hi)).transpose()?;

    let mut pairs = vec![
        ("in", a.input.display().to_string()),
        ("out", a.out.display().to_string()),
        ("channel", a.channel.clone()),
        ("class", class.as_str().to_string()),
        ("window", util::pair_str(window)),
        ("segment-s", a.segment_s.to_string()),
        ("overlap", a.overlap.to_string()),
    ];
    if let Some(b) = band {
        pairs.push(("band", util::pair_str(b)));
    }
    let prov = Provenance::new("psd", None, pairs);

    let mut text = String::new();
    text.push_str(&format!("# channel: {}\n", a.channel));
    text.push_str(&format!("# class: {}\n", class.as_str()));
    text.push_str(&format!("# fs: {}\n", psd.fs));
    text.push_str(&format!("# nperseg: {}\n", psd.nperseg));
    text.push_str(&format!("# n_segments: {}\n", psd.n_segments));
    text.push_str(&format!("# window_s: {}\n", util::pair_str(window)));
    if let (Some(b), Some(p)) = (band, in_band) {
        text.push_str(&format!("# band_hz: {}\n", util::pair_str(b)));
        text.push_str(&format!("# band_power: {p}\n"));
    }
    text.push_str(&format!(
        "# provenance: {}\n",
        serde_json::to_string(&prov.to_value()).expect("provenance always serializes")
    ));
    text.push_str("freq_hz,power\n");
    for (f, p) in psd.freqs.iter().zip(&psd.power) {
        text.push_str(&format!("{f},{p}\n"));
    }
    util::write_text(&a.out, &text)?;

    println!(
        "averaged {} spectrum of {} over {} bins -> {}",
        class.as_str(),
        a.channel,
        psd.freqs.len(),
        a.out.display()
    );
    Ok(())
}
