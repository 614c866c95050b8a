//! `miep simulate` — replay a recorded dataset through one closed-loop
//! feedback run: scheduled trial markers, online classification inside the
//! feedback window, and stimulation gating on cue/prediction agreement.
//!
//! Outputs: the full event log as JSON-lines (`--out`), a summary JSON
//! (`--summary`, default `<out>.summary.json`), and optionally the raw
//! 4-byte stimulator frames in emission order (`--fes-dump`).

use std::path::PathBuf;

use clap::Args;
use miep_core::classifier::load_model;
use miep_core::dsp::design_butterworth_bandpass;
use miep_core::session::{
    encode_fes, fes_command_for, run_session, EventKind, SessionConfig, SessionLog, TrialSchedule,
};
use miep_core::signal_model::Label;

use crate::errors::CliError;
use crate::provenance::Provenance;
use crate::util;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Dataset to replay (binary container or CSV directory).
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Trained model document.
    #[arg(long)]
    pub model: PathBuf,
    /// Output JSON-lines event log.
    #[arg(long)]
    pub out: PathBuf,
    /// Summary JSON path (default: `<out>.summary.json`).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Cue onset override, seconds from trial start.
    #[arg(long, default_value_t = 2.0)]
    pub cue_s: f64,
    /// Trial length override (relax marker), seconds from trial start.
    #[arg(long, default_value_t = 8.0)]
    pub relax_s: f64,
    /// Feedback window override, as LO:HI seconds from trial start.
    #[arg(long, default_value = "4:8", value_name = "LO:HI")]
    pub feedback: String,
    /// Inter-trial interval override, seconds.
    #[arg(long, default_value_t = 2.0)]
    pub iti_s: f64,
    /// Trials per run override.
    #[arg(long, default_value_t = 60)]
    pub trials: usize,
    /// Cadence of classifier evaluations inside the feedback window.
    #[arg(long, default_value_t = 0.5)]
    pub eval_step_s: f64,
    /// Sliding window fed to the classifier, seconds.
    #[arg(long, default_value_t = 1.5)]
    pub eval_window_s: f64,
    /// Keep stimulation latched on until the feedback window ends instead of
    /// gating off on a mismatch.
    #[arg(long)]
    pub latched_fes: bool,
    /// Dump raw 4-byte stimulator frames in emission order.
    #[arg(long, value_name = "PATH")]
    pub fes_dump: Option<PathBuf>,
}

/// Renders the stimulator frames the run would have sent: on-commands carry
/// the cued side; off-commands target whichever channel is currently active.
fn fes_frames(log: &SessionLog) -> Vec<u8> {
    let mut bytes = Vec::new();
    let mut active: Option<Label> = None;
    for e in &log.events {
        match e.kind {
            EventKind::FesOn(side) => {
                if let Some(cmd) = fes_command_for(side, true) {
                    bytes.extend_from_slice(&encode_fes(cmd));
                    active = Some(side);
                }
            }
            EventKind::FesOff => {
                if let Some(cmd) = active.take().and_then(|side| fes_command_for(side, false)) {
                    bytes.extend_from_slice(&encode_fes(cmd));
                }
            }
            _ => {}
        }
    }
    bytes
}

pub fn run(a: SimulateArgs) -> Result<(), CliError> {
    let feedback = util::parse_pair(&a.feedback, "--feedback")?;
    let sched = TrialSchedule {
        beep_s: 0.0,
        cue_s: a.cue_s,
        relax_s: a.relax_s,
        feedback_window: feedback,
        iti_s: a.iti_s,
        trials_per_run: a.trials,
    };
    let cfg = SessionConfig {
        eval_step_s: a.eval_step_s,
        eval_window_s: a.eval_window_s,
        latched_fes: a.latched_fes,
    };

    let set = util::load_dataset(&a.input)?;
    let model = load_model(&a.model)?;
    let filter = design_butterworth_bandpass(
        model.filter_order,
        model.csp.band.0,
        model.csp.band.1,
        set.fs(),
    )?;
    let log = run_session(&set, &model.csp, &model.lda, &filter, &sched, &cfg)?;

    let summary_path = a
        .summary
        .clone()
        .unwrap_or_else(|| util::suffixed_path(&a.out, "summary.json"));
    let mut pairs = vec![
        ("in", a.input.display().to_string()),
        ("model", a.model.display().to_string()),
        ("out", a.out.display().to_string()),
        ("summary", summary_path.display().to_string()),
        ("cue-s", a.cue_s.to_string()),
        ("relax-s", a.relax_s.to_string()),
        ("feedback", util::pair_str(feedback)),
        ("iti-s", a.iti_s.to_string()),
        ("trials", a.trials.to_string()),
        ("eval-step-s", a.eval_step_s.to_string()),
        ("eval-window-s", a.eval_window_s.to_string()),
        ("latched-fes", a.latched_fes.to_string()),
    ];
    if let Some(p) = &a.fes_dump {
        pairs.push(("fes-dump", p.display().to_string()));
    }
    let prov = Provenance::new("simulate", None, pairs);

    util::write_text(&a.out, &log.to_jsonl())?;

    let hits = log.outcomes.iter().filter(|o| o.hit).count();
    let fes_activations =
        log.events.iter().filter(|e| matches!(e.kind, EventKind::FesOn(_))).count();
    let summary = serde_json::json!({
        "provenance": prov.to_value(),
        "summary": {
            "n_trials": log.n_trials,
            "duration_s": log.duration_s,
            "online_accuracy": log.online_accuracy,
            "hits": hits,
            "fes_activations": fes_activations,
            "n_events": log.events.len(),
        },
        "outcomes": log.outcomes,
    });
    util::write_json(&summary_path, &summary)?;

    if let Some(p) = &a.fes_dump {
        util::write_text_bytes(p, &fes_frames(&log))?;
    }

    println!(
        "replayed {} trials over {} s: online accuracy {:.4} ({} hits), {} stimulations -> {}",
        log.n_trials,
        log.duration_s,
        log.online_accuracy,
        hits,
        fes_activations,
        a.out.display()
    );
    Ok(())
}
