//! Synthetic lateralized motor-imagery EEG with known ground truth.
//!
//! Each trial is per-channel 1/f-shaped background noise plus two rhythm
//! sources (a mu and beta sinusoid pair with random phases) located at the
//! C3 and C4 electrode coordinates and mixed into every channel with a
//! Gaussian spatial falloff. From the cue onward, the source contralateral
//! to the imagined hand is attenuated by the ERD depth: right-hand trials
//! attenuate the C3 source, left-hand trials the C4 source. Everything is a
//! pure function of the parameter set — trials draw from per-trial derived
//! RNG streams, so generation order cannot change the output — and samples
//! are quantized to `f32` so the binary interchange format round-trips
//! bit-exactly.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::seeding::{stream_rng, DOMAIN_GEN_LABELS, DOMAIN_GEN_TRIAL};
use crate::signal_model::{DataError, Epoch, EpochSet, Label, Montage, OnsetMeta};

/// Errors from dataset generation.
#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

impl GenError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            GenError::InvalidParams(_) => ErrorCategory::Data,
            GenError::Data(e) => e.category(),
        }
    }
}

/// Generator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub n_trials_per_class: usize,
    /// Sampling rate in Hz.
    pub fs: f64,
    /// Trial length in seconds.
    pub trial_s: f64,
    /// Cue onset in seconds; the imagery (ERD) window is `[cue_s, trial_s)`.
    pub cue_s: f64,
    /// Fractional amplitude reduction of the contralateral source during
    /// imagery, in `[0, 1]`. 0 produces classless data.
    pub erd_depth: f64,
    pub mu_hz: f64,
    pub beta_hz: f64,
    /// Rhythm-to-background RMS ratio at the source electrode, in dB.
    pub snr_db: f64,
    /// Gaussian mixing falloff scale in montage coordinate units.
    pub source_spread: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_trials_per_class: 60,
            fs: 256.0,
            trial_s: 8.0,
            cue_s: 2.0,
            erd_depth: 0.8,
            mu_hz: 10.0,
            beta_hz: 20.0,
            snr_db: 6.0,
            source_spread: 0.25,
            seed: 0,
        }
    }
}

impl GenParams {
    fn validate(&self) -> Result<(), GenError> {
        let fail = |msg: String| Err(GenError::InvalidParams(msg));
        if self.n_trials_per_class == 0 {
            return fail("need at least 1 trial per class".into());
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return fail(format!("invalid sampling rate {}", self.fs));
        }
        if !(0.0..=1.0).contains(&self.erd_depth) {
            return fail(format!("erd_depth {} outside [0, 1]", self.erd_depth));
        }
        if !self.snr_db.is_finite() {
            return fail(format!("snr_db {} is not finite", self.snr_db));
        }
        if !(self.source_spread.is_finite() && self.source_spread > 0.0) {
            return fail(format!("source_spread {} must be positive", self.source_spread));
        }
        if !(self.cue_s.is_finite() && self.cue_s >= 0.0) {
            return fail(format!("cue_s {} must be non-negative", self.cue_s));
        }
        if !(self.trial_s.is_finite() && self.trial_s > self.cue_s) {
            return fail(format!(
                "trial_s {} must exceed cue_s {}",
                self.trial_s, self.cue_s
            ));
        }
        for (name, f) in [("mu_hz", self.mu_hz), ("beta_hz", self.beta_hz)] {
            if !(f.is_finite() && f > 0.0 && f < self.fs / 2.0) {
                return fail(format!("{name} {f} outside (0, fs/2)"));
            }
        }
        if (self.trial_s * self.fs).round() < 16.0 {
            return fail("trial too short for 1/f shaping".into());
        }
        Ok(())
    }
}

/// Expected relationship between the two class-mean band powers at one
/// electrode, as implied by the generator construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPowerOrdering {
    pub channel: String,
    pub band_hz: (f64, f64),
    /// Class whose trials are attenuated at this electrode during imagery.
    pub lower_class: Label,
    pub higher_class: Label,
    /// `false` when `erd_depth == 0`: the classes cannot be told apart.
    pub distinguishable: bool,
}

/// Machine-readable description of what the generated data contains;
/// downstream analyses are tested against this record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Electrodes hosting the two rhythm sources.
    pub source_channels: (String, String),
    /// Label whose trials attenuate each source during imagery.
    pub right_label_attenuates: String,
    pub left_label_attenuates: String,
    /// ERD window in seconds from trial start.
    pub imagery_window_s: (f64, f64),
    pub mu_hz: f64,
    pub beta_hz: f64,
    pub erd_depth: f64,
    pub snr_db: f64,
    pub fs: f64,
    pub n_trials_per_class: usize,
    pub seed: u64,
    pub expected_orderings: Vec<BandPowerOrdering>,
}

/// Describes the dataset `generate_dataset(p)` produces, without generating.
pub fn ground_truth(p: &GenParams) -> Result<GroundTruth, GenError> {
    p.validate()?;
    let distinguishable = p.erd_depth > 0.0;
    let band = (8.0, 30.0);
    Ok(GroundTruth {
        source_channels: ("C3".into(), "C4".into()),
        right_label_attenuates: "C3".into(),
        left_label_attenuates: "C4".into(),
        imagery_window_s: (p.cue_s, p.trial_s),
        mu_hz: p.mu_hz,
        beta_hz: p.beta_hz,
        erd_depth: p.erd_depth,
        snr_db: p.snr_db,
        fs: p.fs,
        n_trials_per_class: p.n_trials_per_class,
        seed: p.seed,
        expected_orderings: vec![
            BandPowerOrdering {
                channel: "C3".into(),
                band_hz: band,
                lower_class: Label::Right,
                higher_class: Label::Left,
                distinguishable,
            },
            BandPowerOrdering {
                channel: "C4".into(),
                band_hz: band,
                lower_class: Label::Left,
                higher_class: Label::Right,
                distinguishable,
            },
        ],
    })
}

/// Shapes unit white noise into 1/f noise: scales FFT bin `k` by
/// `1/sqrt(max(|f_k|, 1 Hz))` and renormalizes to unit empirical std.
fn one_over_f(noise: &mut [f64], fs: f64) {
    let n = noise.len();
    let mut buf: Vec<Complex<f64>> =
        noise.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let df = fs / n as f64;
    for (k, b) in buf.iter_mut().enumerate() {
        // Mirror-symmetric frequency magnitude keeps the signal real.
        let f = df * k.min(n - k) as f64;
        *b *= 1.0 / f.max(1.0).sqrt();
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    for (x, b) in noise.iter_mut().zip(&buf) {
        *x = b.re / n as f64;
    }
    let mean = noise.iter().sum::<f64>() / n as f64;
    let std = (noise.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64).sqrt();
    for x in noise.iter_mut() {
        *x = (*x - mean) / std;
    }
}

/// One trial: background plus phase-randomized rhythms; pure per subseed.
fn generate_trial(
    p: &GenParams,
    montage: &Montage,
    label: Label,
    rng: &mut ChaCha8Rng,
) -> DMatrix<f64> {
    let n_samples = (p.trial_s * p.fs).round() as usize;
    let n_channels = montage.len();
    let cue_sample = (p.cue_s * p.fs).round() as usize;

    // Rhythm phases, drawn before the noise so the stream layout is fixed.
    let phases: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..TAU)).collect();

    // Per-sinusoid amplitude giving the requested total rhythm RMS at the
    // source electrode: mu at a, beta at a/2 carry a·sqrt(5/8) RMS together,
    // against unit-RMS background.
    let amp = 10.0_f64.powf(p.snr_db / 20.0) / (5.0_f64 / 8.0).sqrt();

    let sources = [("C3", Label::Right), ("C4", Label::Left)];
    let source_pos: Vec<(f64, f64, Label)> = sources
        .iter()
        .map(|&(name, attenuating)| {
            let i = montage
                .index_of(name)
                .expect("generator montage always contains C3 and C4");
            let pos = montage.position(i).unwrap();
            (pos.x, pos.y, attenuating)
        })
        .collect();

    let mut data = DMatrix::zeros(n_channels, n_samples);
    let mut noise = vec![0.0_f64; n_samples];
    for ch in 0..n_channels {
        for x in noise.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        one_over_f(&mut noise, p.fs);
        for (s, &x) in noise.iter().enumerate() {
            data[(ch, s)] = x;
        }
    }

    for (src, &(sx, sy, attenuating)) in source_pos.iter().enumerate() {
        let (phase_mu, phase_beta) = (phases[2 * src], phases[2 * src + 1]);
        let rhythm: Vec<f64> = (0..n_samples)
            .map(|s| {
                let t = s as f64 / p.fs;
                let erd = if label == attenuating && s >= cue_sample {
                    1.0 - p.erd_depth
                } else {
                    1.0
                };
                erd * amp
                    * ((TAU * p.mu_hz * t + phase_mu).sin()
                        + 0.5 * (TAU * p.beta_hz * t + phase_beta).sin())
            })
            .collect();
        for ch in 0..n_channels {
            let pos = montage.position(ch).unwrap();
            let d2 = (pos.x - sx) * (pos.x - sx) + (pos.y - sy) * (pos.y - sy);
            let w = (-d2 / (2.0 * p.source_spread * p.source_spread)).exp();
            for (s, &r) in rhythm.iter().enumerate() {
                data[(ch, s)] += w * r;
            }
        }
    }

    // Quantize so the f32 interchange format round-trips bit-exactly.
    data.apply(|x| *x = f64::from(*x as f32));
    data
}

/// Generates a complete balanced, label-shuffled dataset on the standard
/// 16-channel montage. Deterministic per parameter set.
pub fn generate_dataset(p: &GenParams) -> Result<EpochSet, GenError> {
    p.validate()?;
    let montage = Montage::standard_16();

    let mut labels = vec![Label::Left; p.n_trials_per_class];
    labels.extend(vec![Label::Right; p.n_trials_per_class]);
    {
        use rand::seq::SliceRandom;
        labels.shuffle(&mut stream_rng(p.seed, DOMAIN_GEN_LABELS, 0));
    }

    let epochs: Vec<Epoch> = labels
        .iter()
        .enumerate()
        .map(|(i, &label)| {
            let mut rng = stream_rng(p.seed, DOMAIN_GEN_TRIAL, i as u64);
            let data = generate_trial(p, &montage, label, &mut rng);
            let mut e = Epoch::new(data, p.fs, label);
            e.onset_meta = Some(OnsetMeta { cue_s: p.cue_s });
            e
        })
        .collect();

    let provenance = format!(
        "synthetic ERD dataset: {} trials/class, fs {} Hz, trial {} s, cue {} s, \
         erd_depth {}, snr {} dB, spread {}, seed {}",
        p.n_trials_per_class,
        p.fs,
        p.trial_s,
        p.cue_s,
        p.erd_depth,
        p.snr_db,
        p.source_spread,
        p.seed
    );
    Ok(EpochSet::new(montage, p.fs, epochs, provenance)?)
}
