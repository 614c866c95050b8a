//! Spectral summaries: Welch power spectral density, band-power
//! integration, and scalp-map export of fitted spatial patterns.
//!
//! The PSD estimator is the standard Welch method: the signal is cut into
//! half-overlapping segments, each segment is mean-removed, tapered with a
//! periodic Hann window, transformed, and the one-sided periodograms are
//! averaged. The density scaling is chosen so that the integral of the PSD
//! over `[0, fs/2]` approximates the signal variance. Band power integrates
//! the piecewise-linear PSD between two arbitrary frequencies with the
//! trapezoid rule, interpolating at the band edges, which makes the result
//! exactly additive under any split of the band.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csp::CspModel;
use crate::error::ErrorCategory;
use crate::signal_model::{DataError, EpochSet, Label};

/// Errors from spectral estimation and map export.
#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("unknown channel {0:?}")]
    UnknownChannel(String),
    #[error("signal too short: Welch segment needs {needed} samples, window has {have}")]
    WindowTooLong { needed: usize, have: usize },
    #[error("band [{lo}, {hi}] Hz outside the PSD grid [{min}, {max}] Hz or empty")]
    BandOutOfRange { lo: f64, hi: f64, min: f64, max: f64 },
    #[error("no trials labeled {}", .0.as_str())]
    EmptyClass(Label),
    #[error("filter index {index} out of range for a model with {count} filters")]
    FilterIndexOutOfRange { index: usize, count: usize },
    #[error("invalid spectral parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

impl SpectralError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            SpectralError::Data(e) => e.category(),
            _ => ErrorCategory::Data,
        }
    }
}

/// Welch estimator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchConfig {
    /// Segment length in seconds (default 1.0).
    pub segment_s: f64,
    /// Fractional segment overlap in `[0, 1)` (default 0.5).
    pub overlap: f64,
}

impl Default for WelchConfig {
    fn default() -> Self {
        WelchConfig { segment_s: 1.0, overlap: 0.5 }
    }
}

/// One-sided power spectral density on a uniform frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psd {
    /// Bin frequencies in Hz, `0, fs/n, 2 fs/n, …, fs/2`.
    pub freqs: Vec<f64>,
    /// Density values in signal-units² per Hz.
    pub power: Vec<f64>,
    pub fs: f64,
    /// Segment length in samples.
    pub nperseg: usize,
    /// Segments averaged.
    pub n_segments: usize,
}

/// Periodic Hann window of length `n`.
fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()))
        .collect()
}

/// Welch PSD of a single channel.
pub fn welch_psd(samples: &[f64], fs: f64, cfg: &WelchConfig) -> Result<Psd, SpectralError> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(SpectralError::InvalidParams(format!("invalid sampling rate {fs}")));
    }
    if !(cfg.segment_s.is_finite() && cfg.segment_s > 0.0) {
        return Err(SpectralError::InvalidParams(format!(
            "invalid segment length {} s",
            cfg.segment_s
        )));
    }
    if !(0.0..1.0).contains(&cfg.overlap) {
        return Err(SpectralError::InvalidParams(format!(
            "overlap {} outside [0, 1)",
            cfg.overlap
        )));
    }
    let nperseg = (cfg.segment_s * fs).round() as usize;
    if nperseg < 2 {
        return Err(SpectralError::InvalidParams(format!(
            "segment of {} s at {} Hz is shorter than 2 samples",
            cfg.segment_s, fs
        )));
    }
    if samples.len() < nperseg {
        return Err(SpectralError::WindowTooLong { needed: nperseg, have: samples.len() });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(SpectralError::InvalidParams("non-finite sample".into()));
    }
    let hop = ((nperseg as f64 * (1.0 - cfg.overlap)).round() as usize).max(1);
    let window = hann(nperseg);
    let window_power: f64 = window.iter().map(|w| w * w).sum();

    let fft = FftPlanner::new().plan_fft_forward(nperseg);
    let n_bins = nperseg / 2 + 1;
    let mut acc = vec![0.0_f64; n_bins];
    let mut buf = vec![Complex::new(0.0, 0.0); nperseg];
    let mut n_segments = 0usize;
    let mut start = 0usize;
    while start + nperseg <= samples.len() {
        let seg = &samples[start..start + nperseg];
        let mean = seg.iter().sum::<f64>() / nperseg as f64;
        for (b, (&x, &w)) in buf.iter_mut().zip(seg.iter().zip(&window)) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            let density = buf[k].norm_sqr() / (fs * window_power);
            // One-sided spectrum: interior bins absorb the mirrored half.
            let one_sided = if k == 0 || (nperseg % 2 == 0 && k == nperseg / 2) {
                density
            } else {
                2.0 * density
            };
            *a += one_sided;
        }
        n_segments += 1;
        start += hop;
    }
    for a in &mut acc {
        *a /= n_segments as f64;
    }
    Ok(Psd {
        freqs: (0..n_bins).map(|k| k as f64 * fs / nperseg as f64).collect(),
        power: acc,
        fs,
        nperseg,
        n_segments,
    })
}

/// Linear interpolation of the PSD at frequency `f` (must lie on the grid
/// range; callers validate).
fn interp(psd: &Psd, f: f64) -> f64 {
    let i = psd.freqs.partition_point(|&g| g < f);
    if i < psd.freqs.len() && psd.freqs[i] == f {
        return psd.power[i];
    }
    let (f0, f1) = (psd.freqs[i - 1], psd.freqs[i]);
    let (p0, p1) = (psd.power[i - 1], psd.power[i]);
    p0 + (p1 - p0) * (f - f0) / (f1 - f0)
}

/// Integrates the PSD over `[lo, hi]` Hz by the trapezoid rule on the grid
/// points inside the band plus linearly interpolated band edges. Exactly
/// additive: `band_power(a, b) + band_power(b, c) == band_power(a, c)` up to
/// rounding for any `a < b < c`.
pub fn band_power(psd: &Psd, lo: f64, hi: f64) -> Result<f64, SpectralError> {
    let (min, max) = match (psd.freqs.first(), psd.freqs.last()) {
        (Some(&a), Some(&b)) if psd.freqs.len() >= 2 => (a, b),
        _ => {
            return Err(SpectralError::InvalidParams("PSD grid has fewer than 2 bins".into()))
        }
    };
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi || lo < min || hi > max {
        return Err(SpectralError::BandOutOfRange { lo, hi, min, max });
    }
    let mut nodes = vec![(lo, interp(psd, lo))];
    for (&f, &p) in psd.freqs.iter().zip(&psd.power) {
        if f > lo && f < hi {
            nodes.push((f, p));
        }
    }
    nodes.push((hi, interp(psd, hi)));
    let mut total = 0.0;
    for pair in nodes.windows(2) {
        let ((f0, p0), (f1, p1)) = (pair[0], pair[1]);
        total += 0.5 * (p0 + p1) * (f1 - f0);
    }
    Ok(total)
}

/// Average PSD of one channel over every trial of one class, computed on the
/// given analysis window.
pub fn class_average_psd(
    set: &EpochSet,
    channel: &str,
    class: Label,
    window_s: (f64, f64),
    cfg: &WelchConfig,
) -> Result<Psd, SpectralError> {
    let ch = set
        .montage()
        .index_of(channel)
        .ok_or_else(|| SpectralError::UnknownChannel(channel.to_string()))?;
    let mut mean: Option<Psd> = None;
    let mut count = 0usize;
    for epoch in set.epochs().iter().filter(|e| e.label == class) {
        let w = epoch.window(window_s.0, window_s.1)?;
        let samples: Vec<f64> = w.row(ch).iter().copied().collect();
        let psd = welch_psd(&samples, set.fs(), cfg)?;
        match &mut mean {
            None => mean = Some(psd),
            Some(m) => {
                for (a, p) in m.power.iter_mut().zip(&psd.power) {
                    *a += p;
                }
            }
        }
        count += 1;
    }
    let mut mean = mean.ok_or(SpectralError::EmptyClass(class))?;
    for a in &mut mean.power {
        *a /= count as f64;
    }
    Ok(mean)
}

/// One channel of a scalp map. Serialized with the key `channel` for the
/// electrode name, matching the map-record JSON emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    #[serde(rename = "channel")]
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

/// A spatial pattern rendered against the montage: for each electrode, its
/// position and the pattern weight (source-projection strength) of one
/// retained CSP filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternMap {
    /// Row index of the filter in the model (0-based).
    pub filter_index: usize,
    /// Class whose variance this filter maximizes.
    pub favors: Label,
    /// Left-class eigenvalue of the filter.
    pub eigval_left: f64,
    pub channels: Vec<MapPoint>,
}

impl PatternMap {
    /// Electrode with the largest absolute weight.
    pub fn dominant_channel(&self) -> &str {
        self.channels
            .iter()
            .max_by(|a, b| a.weight.abs().total_cmp(&b.weight.abs()))
            .map(|c| c.name.as_str())
            .expect("pattern maps are never empty")
    }

    /// CSV rendering: `channel,x,y,weight` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel,x,y,weight\n");
        for c in &self.channels {
            out.push_str(&format!("{},{},{},{}\n", c.name, c.x, c.y, c.weight));
        }
        out
    }
}

/// Extracts the scalp map of one retained filter from a fitted model.
pub fn pattern_map(model: &CspModel, filter_index: usize) -> Result<PatternMap, SpectralError> {
    let count = model.n_features();
    if filter_index >= count {
        return Err(SpectralError::FilterIndexOutOfRange { index: filter_index, count });
    }
    let favors = if filter_index < model.m {
        model.class_order.0
    } else {
        model.class_order.1
    };
    let channels = model
        .montage
        .channels()
        .iter()
        .enumerate()
        .map(|(i, c)| MapPoint {
            name: c.name.clone(),
            x: c.x,
            y: c.y,
            weight: model.patterns[(i, filter_index)],
        })
        .collect();
    Ok(PatternMap {
        filter_index,
        favors,
        eigval_left: model.eigvals_left[filter_index],
        channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use crate::signal_model::{Epoch, Montage};
    use nalgebra::DMatrix;
    use rand::Rng;

    fn sine(fs: f64, secs: f64, f: f64, amp: f64) -> Vec<f64> {
        let n = (fs * secs) as usize;
        (0..n)
            .map(|k| amp * (2.0 * std::f64::consts::PI * f * k as f64 / fs).sin())
            .collect()
    }

    #[test]
    fn hann_window_satisfies_known_identities() {
        for n in [8usize, 64, 129] {
            let w = hann(n);
            assert_eq!(w[0], 0.0);
            // Periodic form: Σw = n/2, Σw² = 3n/8.
            let sum: f64 = w.iter().sum();
            let sumsq: f64 = w.iter().map(|x| x * x).sum();
            assert!((sum - n as f64 / 2.0).abs() < 1e-9);
            assert!((sumsq - 3.0 * n as f64 / 8.0).abs() < 1e-9);
            // Symmetric around n/2 in the periodic sense.
            for k in 1..n {
                assert!((w[k] - w[n - k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sinusoid_power_lands_in_its_band() {
        let fs = 128.0;
        let amp = 2.0;
        let x = sine(fs, 8.0, 10.0, amp);
        let psd = welch_psd(&x, fs, &WelchConfig::default()).unwrap();
        assert_eq!(psd.nperseg, 128);
        assert_eq!(psd.n_segments, 15);
        // Peak bin sits exactly at 10 Hz.
        let peak = psd
            .power
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(psd.freqs[peak], 10.0);
        // A sinusoid of amplitude A carries A²/2 total power, and the Hann
        // main lobe confines it well inside ±2 Hz of the tone.
        let bp = band_power(&psd, 8.0, 12.0).unwrap();
        assert!((bp - amp * amp / 2.0).abs() < 0.02, "band power {bp}");
        let outside = band_power(&psd, 20.0, 60.0).unwrap();
        assert!(outside < 1e-6, "leakage {outside}");
    }

    #[test]
    fn white_noise_psd_integrates_to_variance() {
        let fs = 128.0;
        let mut rng = seeding::stream_rng(11, 21, 0);
        let x: Vec<f64> = (0..4096).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64;
        let psd = welch_psd(&x, fs, &WelchConfig::default()).unwrap();
        let total = band_power(&psd, 0.0, fs / 2.0).unwrap();
        assert!(
            (total - var).abs() / var < 0.05,
            "PSD integral {total} vs variance {var}"
        );
    }

    #[test]
    fn flat_psd_band_power_equals_band_width() {
        let freqs: Vec<f64> = (0..=128).map(|k| k as f64 * 0.5).collect();
        let psd = Psd {
            power: vec![1.0; freqs.len()],
            freqs,
            fs: 128.0,
            nperseg: 256,
            n_segments: 1,
        };
        assert_eq!(band_power(&psd, 8.0, 30.0).unwrap(), 22.0);
        // Edges off the grid interpolate to the same flat value.
        assert_eq!(band_power(&psd, 8.25, 29.75).unwrap(), 21.5);
    }

    #[test]
    fn band_power_is_additive_under_any_split() {
        let mut rng = seeding::stream_rng(4, 21, 1);
        let freqs: Vec<f64> = (0..=64).map(|k| k as f64).collect();
        let psd = Psd {
            power: (0..=64).map(|_| rng.random_range(0.1..2.0)).collect(),
            freqs,
            fs: 128.0,
            nperseg: 128,
            n_segments: 1,
        };
        for split in [10.0, 13.7, 29.9999] {
            let whole = band_power(&psd, 5.0, 40.0).unwrap();
            let parts = band_power(&psd, 5.0, split).unwrap()
                + band_power(&psd, split, 40.0).unwrap();
            assert!((whole - parts).abs() < 1e-9, "split at {split}: {whole} vs {parts}");
        }
    }

    #[test]
    fn band_power_rejects_bad_bands() {
        let psd = Psd {
            freqs: (0..=64).map(|k| k as f64).collect(),
            power: vec![1.0; 65],
            fs: 128.0,
            nperseg: 128,
            n_segments: 1,
        };
        for (lo, hi) in [(30.0, 8.0), (8.0, 8.0), (-1.0, 10.0), (10.0, 65.0)] {
            assert!(matches!(
                band_power(&psd, lo, hi),
                Err(SpectralError::BandOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn welch_rejects_short_and_invalid_input() {
        let x = vec![0.0; 100];
        assert!(matches!(
            welch_psd(&x, 128.0, &WelchConfig::default()),
            Err(SpectralError::WindowTooLong { needed: 128, have: 100 })
        ));
        assert!(matches!(
            welch_psd(&x, 128.0, &WelchConfig { segment_s: 0.5, overlap: 1.0 }),
            Err(SpectralError::InvalidParams(_))
        ));
        let mut bad = vec![0.0; 256];
        bad[13] = f64::NAN;
        assert!(matches!(
            welch_psd(&bad, 128.0, &WelchConfig::default()),
            Err(SpectralError::InvalidParams(_))
        ));
    }

    fn two_class_set() -> EpochSet {
        let fs = 128.0;
        let montage = Montage::from_names(&["ch0", "ch1"]);
        let mut epochs = Vec::new();
        for i in 0..6 {
            let label = if i % 2 == 0 { Label::Left } else { Label::Right };
            let f = if label == Label::Left { 10.0 } else { 22.0 };
            let mut rng = seeding::stream_rng(7, 30, i as u64);
            let data = DMatrix::from_fn(2, 512, |c, s| {
                let tone = if c == 0 {
                    (2.0 * std::f64::consts::PI * f * s as f64 / fs).sin()
                } else {
                    0.0
                };
                tone + 0.1 * rng.random_range(-1.0..1.0_f64)
            });
            epochs.push(Epoch::new(data, fs, label));
        }
        EpochSet::new(montage, fs, epochs, "spectral test").unwrap()
    }

    #[test]
    fn class_average_psd_separates_class_rhythms() {
        let set = two_class_set();
        let cfg = WelchConfig::default();
        let left = class_average_psd(&set, "ch0", Label::Left, (0.0, 4.0), &cfg).unwrap();
        let right = class_average_psd(&set, "ch0", Label::Right, (0.0, 4.0), &cfg).unwrap();
        let mu_left = band_power(&left, 8.0, 12.0).unwrap();
        let mu_right = band_power(&right, 8.0, 12.0).unwrap();
        let beta_left = band_power(&left, 20.0, 24.0).unwrap();
        let beta_right = band_power(&right, 20.0, 24.0).unwrap();
        assert!(mu_left > 10.0 * mu_right);
        assert!(beta_right > 10.0 * beta_left);
    }

    #[test]
    fn class_average_psd_is_the_mean_of_trial_psds() {
        let set = two_class_set();
        let cfg = WelchConfig::default();
        let avg = class_average_psd(&set, "ch1", Label::Left, (0.0, 4.0), &cfg).unwrap();
        let mut manual = vec![0.0; avg.power.len()];
        let mut count = 0;
        for e in set.epochs().iter().filter(|e| e.label == Label::Left) {
            let w = e.window(0.0, 4.0).unwrap();
            let samples: Vec<f64> = w.row(1).iter().copied().collect();
            let psd = welch_psd(&samples, set.fs(), &cfg).unwrap();
            for (m, p) in manual.iter_mut().zip(&psd.power) {
                *m += p;
            }
            count += 1;
        }
        for (m, a) in manual.iter().zip(&avg.power) {
            assert!((m / count as f64 - a).abs() < 1e-15);
        }
    }

    #[test]
    fn class_average_psd_validates_channel_and_class() {
        let set = two_class_set();
        let cfg = WelchConfig::default();
        assert!(matches!(
            class_average_psd(&set, "nope", Label::Left, (0.0, 4.0), &cfg),
            Err(SpectralError::UnknownChannel(_))
        ));
        assert!(matches!(
            class_average_psd(&set, "ch0", Label::Unlabeled, (0.0, 4.0), &cfg),
            Err(SpectralError::EmptyClass(Label::Unlabeled))
        ));
    }

    #[test]
    fn pattern_map_mirrors_model_columns() {
        use crate::classifier::{train_models, PipelineConfig};
        let set = {
            let fs = 128.0;
            let montage = Montage::from_names(&["p", "q", "r"]);
            let mut epochs = Vec::new();
            for i in 0..10 {
                let label = if i % 2 == 0 { Label::Left } else { Label::Right };
                let hot = if label == Label::Left { 0 } else { 2 };
                let mut rng = seeding::stream_rng(1, 31, i as u64);
                let data = DMatrix::from_fn(3, 256, |c, _| {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    if c == hot {
                        3.0 * x
                    } else {
                        x
                    }
                });
                epochs.push(Epoch::new(data, fs, label));
            }
            EpochSet::new(montage, fs, epochs, "map test").unwrap()
        };
        let cfg = PipelineConfig { m: 1, window_s: (0.0, 2.0), ..Default::default() };
        let (csp, _) = train_models(&set, &cfg).unwrap();

        let first = pattern_map(&csp, 0).unwrap();
        assert_eq!(first.favors, csp.class_order.0);
        assert_eq!(first.channels.len(), 3);
        for (i, c) in first.channels.iter().enumerate() {
            assert_eq!(c.weight, csp.patterns[(i, 0)]);
        }
        // Left trials put their variance on channel "p": its pattern entry
        // dominates the left-favoring map.
        assert_eq!(first.dominant_channel(), "p");
        let last = pattern_map(&csp, 1).unwrap();
        assert_eq!(last.favors, csp.class_order.1);
        assert_eq!(last.dominant_channel(), "r");

        let csv = first.to_csv();
        assert!(csv.starts_with("channel,x,y,weight\n"));
        assert_eq!(csv.lines().count(), 4);
        let json = serde_json::to_value(&first.channels[0]).unwrap();
        assert!(json.get("channel").is_some(), "map records key the electrode as `channel`");

        assert!(matches!(
            pattern_map(&csp, 2),
            Err(SpectralError::FilterIndexOutOfRange { index: 2, count: 2 })
        ));
    }
}
