//! Subcommand implementations. Each module owns its clap `Args` struct and a
//! `run` function returning `Result<(), CliError>`.

pub mod cv;
pub mod filter;
pub mod gen;
pub mod patterns;
pub mod psd;
pub mod report;
pub mod simulate;
pub mod train;

use clap::Args;
use miep_core::classifier::PipelineConfig;

use crate::errors::CliError;
use crate::util;

/// Pipeline flags shared by `train` and `cv`.
#[derive(Debug, Args)]
pub struct PipelineFlags {
    /// Band-pass edges in Hz, as LO:HI.
    #[arg(long, default_value = "8:30", value_name = "LO:HI")]
    pub band: String,
    /// Butterworth design order.
    #[arg(long, default_value_t = 5)]
    pub order: usize,
    /// Spatial-filter pairs to keep (feature dimension is 2m).
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Analysis window in seconds from trial start, as LO:HI.
    #[arg(long, default_value = "2.5:6", value_name = "LO:HI")]
    pub window: String,
}

impl PipelineFlags {
    pub fn to_config(&self) -> Result<PipelineConfig, CliError> {
        Ok(PipelineConfig {
            band: util::parse_pair(&self.band, "--band")?,
            order: self.order,
            m: self.m,
            window_s: util::parse_pair(&self.window, "--window")?,
            ..PipelineConfig::default()
        })
    }

    /// Canonical provenance pairs for these flags.
    pub fn provenance_pairs(&self, cfg: &PipelineConfig) -> Vec<(&'static str, String)> {
        vec![
            ("band", util::pair_str(cfg.band)),
            ("order", cfg.order.to_string()),
            ("m", cfg.m.to_string()),
            ("window", util::pair_str(cfg.window_s)),
        ]
    }
}
