//! Electrode montage: ordered channel names with 2-D scalp coordinates.
//!
//! Coordinates live on the unit disc viewed from above: +x is the subject's
//! right, +y anterior, CZ at the origin. Only relative geometry matters to
//! the pipeline (spatial-pattern rendering and source mixing), so positions
//! are nominal rather than digitized.

use serde::{Deserialize, Serialize};

/// One electrode: name plus nominal scalp position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPos {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

impl ChannelPos {
    pub fn new(name: &str, x: f64, y: f64) -> Self {
        ChannelPos { name: name.to_string(), x, y }
    }

    /// Distance from the vertex (CZ).
    pub fn radius(&self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }
}

/// Nominal unit-disc coordinates for the channels this crate knows about.
///
/// The central row is spaced 0.2 apart, the fronto-central and
/// centro-parietal rows sit at y = ±0.25 with lateral channels at ±0.35,
/// intermediate channels midway, and PZ on the midline at y = −0.4.
const STANDARD_POSITIONS: &[(&str, f64, f64)] = &[
    ("FC3", -0.35, 0.25),
    ("FCZ", 0.0, 0.25),
    ("FC4", 0.35, 0.25),
    ("C5", -0.6, 0.0),
    ("C3", -0.4, 0.0),
    ("C1", -0.2, 0.0),
    ("CZ", 0.0, 0.0),
    ("C2", 0.2, 0.0),
    ("C4", 0.4, 0.0),
    ("C6", 0.6, 0.0),
    ("CP3", -0.35, -0.25),
    ("CP1", -0.175, -0.25),
    ("CPZ", 0.0, -0.25),
    ("CP2", 0.175, -0.25),
    ("CP4", 0.35, -0.25),
    ("PZ", 0.0, -0.4),
];

/// Ordered electrode set. Channel order defines the row order of every
/// epoch's data matrix, so two montages are interchangeable only if equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Montage {
    channels: Vec<ChannelPos>,
}

impl Montage {
    /// Builds a montage from explicit channels; no validation is performed
    /// here — run [`crate::signal_model::validate_montage`] to audit one.
    pub fn new(channels: Vec<ChannelPos>) -> Self {
        Montage { channels }
    }

    /// The 16-channel sensorimotor montage used throughout this crate:
    /// FC3, FCZ, FC4, C5, C3, C1, CZ, C2, C4, C6, CP3, CP1, CPZ, CP2, CP4, PZ.
    pub fn standard_16() -> Self {
        Montage {
            channels: STANDARD_POSITIONS
                .iter()
                .map(|&(name, x, y)| ChannelPos::new(name, x, y))
                .collect(),
        }
    }

    /// Reconstructs a montage from names alone (e.g. when loading a binary
    /// file, which does not persist coordinates). Names present in the
    /// standard table get their nominal position; unknown names fall back to
    /// the vertex (0, 0).
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        let channels = names
            .iter()
            .map(|n| {
                let name = n.as_ref();
                match STANDARD_POSITIONS.iter().find(|(s, _, _)| *s == name) {
                    Some(&(_, x, y)) => ChannelPos::new(name, x, y),
                    None => ChannelPos::new(name, 0.0, 0.0),
                }
            })
            .collect();
        Montage { channels }
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn channels(&self) -> &[ChannelPos] {
        &self.channels
    }

    /// Channel names in montage order.
    pub fn names(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.name.as_str()).collect()
    }

    /// Row index of `name`, or `None` if absent.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    /// Position of channel `idx`.
    pub fn position(&self, idx: usize) -> Option<&ChannelPos> {
        self.channels.get(idx)
    }
}
