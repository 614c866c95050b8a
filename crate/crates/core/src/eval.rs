//! Study-level bookkeeping: clinical subject records and motor-outcome
//! reports.
//!
//! The toolkit ships a ten-subject clinical fixture (demographics plus
//! upper-extremity Fugl-Meyer assessment scores before and after training,
//! on the 0–66 scale). Scores are recorded data — they come from a
//! clinician-administered scale and are never computed from signals. The
//! report layer turns a record list into per-subject deltas and summary
//! counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;

/// Upper limit of the upper-extremity Fugl-Meyer motor scale.
pub const FMA_FULL_SCORE: u32 = 66;

const FIXTURE_CSV: &str = include_str!("../resources/clinical_fixture.csv");

/// Errors from record validation and fixture parsing.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid subject record: {0}")]
    InvalidRecord(String),
    #[error("malformed subject table at line {line}: {what}")]
    MalformedTable { line: usize, what: String },
}

impl EvalError {
    pub fn category(&self) -> ErrorCategory {
        ErrorCategory::Data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Female,
    Male,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrokeType {
    Trauma,
    Ischemic,
    Hemorrhage,
    Infarction,
}

/// Body side of the paresis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// One study subject with motor scores before and after training.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: u32,
    pub gender: Gender,
    pub age_years: u32,
    pub stroke_type: StrokeType,
    pub paretic_side: Side,
    pub months_since_stroke: u32,
    /// Fugl-Meyer score before training, 0–66.
    pub fma_pre: u32,
    /// Fugl-Meyer score after training, 0–66.
    pub fma_post: u32,
}

impl SubjectRecord {
    pub fn validate(&self) -> Result<(), EvalError> {
        for (what, score) in [("fma_pre", self.fma_pre), ("fma_post", self.fma_post)] {
            if score > FMA_FULL_SCORE {
                return Err(EvalError::InvalidRecord(format!(
                    "subject {}: {what} = {score} exceeds the scale maximum {FMA_FULL_SCORE}",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// Direction of a subject's score change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Improved,
    Unchanged,
    Declined,
}

/// Score change of one subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectDelta {
    pub id: u32,
    pub fma_pre: u32,
    pub fma_post: u32,
    /// `fma_post − fma_pre`.
    pub delta: i32,
    pub outcome: Outcome,
}

/// Per-subject deltas plus summary counts; the counts always partition the
/// subject set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementReport {
    /// In input order.
    pub subjects: Vec<SubjectDelta>,
    pub improved: usize,
    pub unchanged: usize,
    pub declined: usize,
    /// Subject with the largest delta (ties broken by lowest id); absent
    /// only for an empty input.
    pub max_improvement: Option<SubjectDelta>,
    pub mean_delta: f64,
}

/// Computes per-subject score changes and the study summary. Pure: the
/// per-subject values depend only on their own record.
pub fn improvement_report(records: &[SubjectRecord]) -> Result<ImprovementReport, EvalError> {
    let mut subjects = Vec::with_capacity(records.len());
    for r in records {
        r.validate()?;
        let delta = r.fma_post as i32 - r.fma_pre as i32;
        let outcome = match delta {
            d if d > 0 => Outcome::Improved,
            0 => Outcome::Unchanged,
            _ => Outcome::Declined,
        };
        subjects.push(SubjectDelta {
            id: r.id,
            fma_pre: r.fma_pre,
            fma_post: r.fma_post,
            delta,
            outcome,
        });
    }
    let count = |o: Outcome| subjects.iter().filter(|s| s.outcome == o).count();
    let max_improvement = subjects
        .iter()
        .copied()
        .max_by(|a, b| a.delta.cmp(&b.delta).then(b.id.cmp(&a.id)));
    let mean_delta = if subjects.is_empty() {
        0.0
    } else {
        subjects.iter().map(|s| s.delta as f64).sum::<f64>() / subjects.len() as f64
    };
    Ok(ImprovementReport {
        improved: count(Outcome::Improved),
        unchanged: count(Outcome::Unchanged),
        declined: count(Outcome::Declined),
        max_improvement,
        mean_delta,
        subjects,
    })
}

fn parse_enum<T: Copy>(
    table: &[(&str, T)],
    raw: &str,
    line: usize,
    what: &str,
) -> Result<T, EvalError> {
    let lower = raw.trim().to_ascii_lowercase();
    table
        .iter()
        .find(|(name, _)| *name == lower)
        .map(|&(_, v)| v)
        .ok_or_else(|| EvalError::MalformedTable {
            line,
            what: format!("unknown {what} {raw:?}"),
        })
}

fn parse_int(raw: &str, line: usize, what: &str) -> Result<u32, EvalError> {
    raw.trim().parse().map_err(|_| EvalError::MalformedTable {
        line,
        what: format!("{what} {raw:?} is not a non-negative integer"),
    })
}

/// Parses a subject table in the fixture's CSV layout
/// (`id,gender,age_years,stroke_type,paretic_side,months_since_stroke,fma_pre,fma_post`).
pub fn parse_subjects_csv(text: &str) -> Result<Vec<SubjectRecord>, EvalError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(EvalError::MalformedTable {
        line: 1,
        what: "empty table".into(),
    })?;
    let expected =
        "id,gender,age_years,stroke_type,paretic_side,months_since_stroke,fma_pre,fma_post";
    if header.trim() != expected {
        return Err(EvalError::MalformedTable {
            line: 1,
            what: format!("header {header:?}, expected {expected:?}"),
        });
    }
    let mut records = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 8 {
            return Err(EvalError::MalformedTable {
                line,
                what: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        let record = SubjectRecord {
            id: parse_int(fields[0], line, "id")?,
            gender: parse_enum(
                &[("female", Gender::Female), ("male", Gender::Male)],
                fields[1],
                line,
                "gender",
            )?,
            age_years: parse_int(fields[2], line, "age")?,
            stroke_type: parse_enum(
                &[
                    ("trauma", StrokeType::Trauma),
                    ("ischemic", StrokeType::Ischemic),
                    ("hemorrhage", StrokeType::Hemorrhage),
                    ("infarction", StrokeType::Infarction),
                ],
                fields[3],
                line,
                "stroke type",
            )?,
            paretic_side: parse_enum(
                &[("left", Side::Left), ("right", Side::Right)],
                fields[4],
                line,
                "paretic side",
            )?,
            months_since_stroke: parse_int(fields[5], line, "months since stroke")?,
            fma_pre: parse_int(fields[6], line, "fma_pre")?,
            fma_post: parse_int(fields[7], line, "fma_post")?,
        };
        record.validate().map_err(|e| EvalError::MalformedTable {
            line,
            what: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// The bundled ten-subject study fixture.
pub fn load_fixture_subjects() -> Vec<SubjectRecord> {
    parse_subjects_csv(FIXTURE_CSV).expect("bundled fixture is well-formed")
}
