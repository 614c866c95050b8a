//! `miep report` — clinical-outcome summary over a subject fixture.
//!
//! Defaults to the bundled upper-extremity motor-score fixture; `--fixture`
//! substitutes any CSV in the same layout. Writes `{provenance, report}`
//! JSON and optionally a per-subject CSV.

use std::path::PathBuf;

use clap::Args;
use miep_core::eval::{improvement_report, load_fixture_subjects, parse_subjects_csv, Outcome};

use crate::errors::CliError;
use crate::provenance::Provenance;
use crate::util;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Subject CSV to evaluate instead of the bundled fixture.
    #[arg(long, value_name = "PATH")]
    pub fixture: Option<PathBuf>,
    /// Output JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one CSV row per subject.
    #[arg(long, value_name = "PATH")]
    pub csv_out: Option<PathBuf>,
}

fn outcome_str(o: Outcome) -> &'static str {
    match o {
        Outcome::Improved => "improved",
        Outcome::Unchanged => "unchanged",
        Outcome::Declined => "declined",
    }
}

pub fn run(a: ReportArgs) -> Result<(), CliError> {
    let subjects = match &a.fixture {
        Some(path) => parse_subjects_csv(&std::fs::read_to_string(path)?)?,
        None => load_fixture_subjects(),
    };
    let report = improvement_report(&subjects)?;

    let mut pairs = vec![(
        "fixture",
        a.fixture
            .as_ref()
            .map_or_else(|| "bundled".to_string(), |p| p.display().to_string()),
    )];
    pairs.push(("out", a.out.display().to_string()));
    if let Some(p) = &a.csv_out {
        pairs.push(("csv-out", p.display().to_string()));
    }
    let prov = Provenance::new("report", None, pairs);

    let doc = serde_json::json!({
        "provenance": prov.to_value(),
        "report": report,
    });
    util::write_json(&a.out, &doc)?;

    if let Some(p) = &a.csv_out {
        let mut csv = String::from("id,fma_pre,fma_post,delta,outcome\n");
        for s in &report.subjects {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                s.id,
                s.fma_pre,
                s.fma_post,
                s.delta,
                outcome_str(s.outcome)
            ));
        }
        util::write_text(p, &csv)?;
    }

    let max = report
        .max_improvement
        .as_ref()
        .map_or_else(|| "none".to_string(), |s| format!("subject {} (+{})", s.id, s.delta));
    println!(
        "{} subjects: {} improved / {} unchanged / {} declined, largest gain {} -> {}",
        report.subjects.len(),
        report.improved,
        report.unchanged,
        report.declined,
        max,
        a.out.display()
    );
    Ok(())
}
