//! `miep` — command-line workflows for the motor-imagery EEG pipeline.
//!
//! One binary, subcommand style. Numeric defaults match the pipeline
//! defaults throughout the library: band 8–30 Hz, Butterworth order 5,
//! m = 3 filter pairs, 10×10 cross-validation, 256 Hz, 60-trial runs.
//!
//! Reproducibility contract: every artifact embeds (or carries as a
//! `.provenance.json` sidecar) the canonical effective configuration, the
//! seed, and the tool version. Re-running that configuration reproduces
//! binary outputs bit-exactly; JSON outputs differ only in the timestamp.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 numerical, 5 I/O. Failures
//! print a single line to stderr: `miep: <Category>: <message>`.
//!
//! `MIEP_THREADS` caps the internal thread pool; parallelism never changes
//! any output.

mod cmd;
mod errors;
mod provenance;
mod util;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "miep",
    version,
    about = "Motor-imagery EEG workflows: generate, filter, train, validate, inspect, simulate",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic lateralized motor-imagery dataset.
    Gen(cmd::gen::GenArgs),
    /// Band-pass filter every trial of a dataset.
    Filter(cmd::filter::FilterArgs),
    /// Train the spatial-filter + discriminant pipeline on a dataset.
    Train(cmd::train::TrainArgs),
    /// Repeated stratified cross-validation of the pipeline.
    Cv(cmd::cv::CvArgs),
    /// Class-averaged power spectral density of one channel.
    Psd(cmd::psd::PsdArgs),
    /// Scalp maps of the spatial patterns of a trained model.
    Patterns(cmd::patterns::PatternsArgs),
    /// Replay a dataset through a closed-loop feedback session.
    Simulate(cmd::simulate::SimulateArgs),
    /// Clinical-outcome summary of the bundled (or a custom) fixture.
    Report(cmd::report::ReportArgs),
}

fn main() {
    init_thread_pool();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd::gen::run(a),
        Command::Filter(a) => cmd::filter::run(a),
        Command::Train(a) => cmd::train::run(a),
        Command::Cv(a) => cmd::cv::run(a),
        Command::Psd(a) => cmd::psd::run(a),
        Command::Patterns(a) => cmd::patterns::run(a),
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::Report(a) => cmd::report::run(a),
    };
    if let Err(e) = result {
        eprintln!("miep: {e}");
        std::process::exit(e.exit_code());
    }
}

/// Applies the `MIEP_THREADS` cap before any parallel work starts. The cap
/// only limits concurrency; results are identical at any thread count.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("MIEP_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                // build_global errors only if a pool already exists; nothing
                // has run yet, so ignore that benign race.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("miep: Usage: MIEP_THREADS must be a positive integer, got `{v}`");
                std::process::exit(2);
            }
        }
    }
}
