//! Band-pass filtering for EEG epochs.
//!
//! [`design_butterworth_bandpass`] builds an order-`n` Butterworth band-pass
//! (analog prototype → LP→BP transform → bilinear transform with frequency
//! prewarping) realized as a cascade of second-order sections in Direct Form
//! II transposed. Both band edges land exactly at −3 dB by construction.
//!
//! Application is causal by default — the online session path requires it —
//! with an optional zero-phase mode (forward-backward pass over a
//! reflection-padded signal) for offline spectra and plots.

use nalgebra::Complex;
use thiserror::Error;

use crate::signal_model::{DataError, Epoch, EpochSet};

/// Failures in filter design or application.
#[derive(Debug, Error)]
pub enum DspError {
    #[error("invalid band {lo}–{hi} Hz at fs {fs} Hz (need 0 < lo < hi < fs/2)")]
    InvalidBand { lo: f64, hi: f64, fs: f64 },
    #[error("invalid filter order {0} (need >= 1)")]
    InvalidOrder(usize),
    #[error("sampling-rate mismatch: filter designed for {expected} Hz, epoch is {got} Hz")]
    RateMismatch { expected: f64, got: f64 },
    #[error(transparent)]
    Data(#[from] DataError),
}

impl DspError {
    pub fn category(&self) -> crate::error::ErrorCategory {
        match self {
            DspError::Data(e) => e.category(),
            _ => crate::error::ErrorCategory::Data,
        }
    }
}

/// One biquad: `H(z) = (b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Sos {
    /// Largest pole magnitude of this section.
    fn pole_radius(&self) -> f64 {
        let [a1, a2] = self.a;
        let disc = a1 * a1 - 4.0 * a2;
        if disc < 0.0 {
            a2.sqrt()
        } else {
            let r1 = (-a1 + disc.sqrt()) / 2.0;
            let r2 = (-a1 - disc.sqrt()) / 2.0;
            r1.abs().max(r2.abs())
        }
    }

    /// Runs the section causally over `x` (Direct Form II transposed,
    /// zero initial state).
    fn filter(&self, x: &mut [f64]) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for v in x.iter_mut() {
            let xi = *v;
            let y = b0 * xi + s1;
            s1 = b1 * xi - a1 * y + s2;
            s2 = b2 * xi - a2 * y;
            *v = y;
        }
    }
}

/// How to run an [`IirFilter`] over an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    /// Single forward pass; the only mode legal for online use.
    #[default]
    Causal,
    /// Forward-backward pass with reflection padding (3× the overall filter
    /// order per side). Doubles the magnitude response in dB and cancels
    /// phase; offline analysis only.
    ZeroPhase,
}

/// A designed band-pass filter: SOS cascade plus its design parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter {
    sections: Vec<Sos>,
    fs: f64,
    band: (f64, f64),
    order: usize,
}

/// Designs an order-`order` Butterworth band-pass for `lo_hz`–`hi_hz` at
/// sampling rate `fs`. The resulting digital filter has 2·`order` poles
/// (`order` biquad sections) and −3 dB points exactly at the band edges.
pub fn design_butterworth_bandpass(
    order: usize,
    lo_hz: f64,
    hi_hz: f64,
    fs: f64,
) -> Result<IirFilter, DspError> {
    if order == 0 {
        return Err(DspError::InvalidOrder(order));
    }
    if !(fs.is_finite() && fs > 0.0)
        || !(lo_hz.is_finite() && hi_hz.is_finite())
        || lo_hz <= 0.0
        || lo_hz >= hi_hz
        || hi_hz >= fs / 2.0
    {
        return Err(DspError::InvalidBand { lo: lo_hz, hi: hi_hz, fs });
    }

    // Prewarped analog edge frequencies: the bilinear transform maps these
    // back onto lo_hz / hi_hz exactly.
    let w_lo = 2.0 * fs * (std::f64::consts::PI * lo_hz / fs).tan();
    let w_hi = 2.0 * fs * (std::f64::consts::PI * hi_hz / fs).tan();
    let bw = w_hi - w_lo;
    let w0 = (w_lo * w_hi).sqrt();

    // Analog Butterworth prototype poles on the unit circle's left half.
    let n = order as f64;
    let prototype: Vec<Complex<f64>> = (0..order)
        .map(|k| {
            let theta = std::f64::consts::PI * (2.0 * k as f64 + n + 1.0) / (2.0 * n);
            Complex::new(theta.cos(), theta.sin())
        })
        .collect();

    // LP→BP: each prototype pole p yields s = p·bw/2 ± sqrt((p·bw/2)² − w0²).
    // The conjugate-symmetric prototype set therefore yields 2·order poles in
    // conjugate pairs; each pair becomes one biquad with real coefficients.
    let blt = |s: Complex<f64>| (2.0 * fs + s) / (2.0 * fs - s);
    let mut sections = Vec::with_capacity(order);
    let mut push_pair = |z1: Complex<f64>, z2: Complex<f64>| {
        let a1 = -(z1 + z2).re;
        let a2 = (z1 * z2).re;
        sections.push(Sos { b: [1.0, 0.0, -1.0], a: [a1, a2] });
    };
    for p in &prototype {
        if p.im <= 1e-12 && p.im >= -1e-12 {
            // Real prototype pole (odd orders): its two band-pass poles are
            // either a conjugate pair or two real poles; both close under
            // conjugation, so they form one section on their own.
            let half = p * (bw / 2.0);
            let disc = (half * half - Complex::new(w0 * w0, 0.0)).sqrt();
            push_pair(blt(half + disc), blt(half - disc));
        } else if p.im > 0.0 {
            // Complex prototype pole: pair each band-pass pole with its
            // conjugate (contributed by the mirrored prototype pole).
            let half = p * (bw / 2.0);
            let disc = (half * half - Complex::new(w0 * w0, 0.0)).sqrt();
            for s in [half + disc, half - disc] {
                let z = blt(s);
                push_pair(z, z.conj());
            }
        }
        // Poles with im < 0 are handled via their conjugates above.
    }
    debug_assert_eq!(sections.len(), order);

    let mut filter = IirFilter { sections, fs, band: (lo_hz, hi_hz), order };

    // Normalize to unit gain at the (warped) digital center frequency,
    // distributing the correction evenly across sections to keep
    // intermediate signal levels balanced.
    let f_center = fs / std::f64::consts::PI * (w0 / (2.0 * fs)).atan();
    let g = filter.magnitude_at(f_center);
    let per_section = (1.0 / g).powf(1.0 / filter.sections.len() as f64);
    for s in &mut filter.sections {
        for b in &mut s.b {
            *b *= per_section;
        }
    }

    debug_assert!(filter.is_stable(), "Butterworth design produced unstable section");
    Ok(filter)
}

impl IirFilter {
    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// (lo, hi) design band in Hz.
    pub fn band(&self) -> (f64, f64) {
        self.band
    }

    /// Design order of the analog prototype (the digital filter has twice as
    /// many poles).
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sections(&self) -> &[Sos] {
        &self.sections
    }

    /// True iff every pole lies strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(|s| s.pole_radius() < 1.0)
    }

    /// Complex frequency response at `f_hz` (single forward pass).
    pub fn response_at(&self, f_hz: f64) -> Complex<f64> {
        let w = 2.0 * std::f64::consts::PI * f_hz / self.fs;
        let z1 = Complex::new(w.cos(), -w.sin()); // z⁻¹
        let z2 = z1 * z1;
        self.sections
            .iter()
            .map(|s| {
                (s.b[0] + s.b[1] * z1 + s.b[2] * z2) / (1.0 + s.a[0] * z1 + s.a[1] * z2)
            })
            .product()
    }

    /// Magnitude response at `f_hz`.
    pub fn magnitude_at(&self, f_hz: f64) -> f64 {
        self.response_at(f_hz).norm()
    }

    /// Magnitude response in dB at `f_hz`.
    pub fn magnitude_db_at(&self, f_hz: f64) -> f64 {
        20.0 * self.magnitude_at(f_hz).log10()
    }

    /// Causal pass over one channel (zero initial conditions). Streaming-safe:
    /// the output for any prefix of `x` equals the prefix of the output.
    pub fn apply_channel(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            s.filter(&mut y);
        }
        y
    }

    /// Zero-phase pass over one channel: endpoint-anchored reflection padding
    /// of 3× the overall filter order, then forward and backward passes.
    pub fn apply_channel_zero_phase(&self, x: &[f64]) -> Vec<f64> {
        if x.is_empty() {
            return Vec::new();
        }
        let pad = (3 * 2 * self.sections.len()).min(x.len() - 1);
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        let first = x[0];
        let last = x[n - 1];
        for i in (1..=pad).rev() {
            ext.push(2.0 * first - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(2.0 * last - x[n - 1 - i]);
        }

        for s in &self.sections {
            s.filter(&mut ext);
        }
        ext.reverse();
        for s in &self.sections {
            s.filter(&mut ext);
        }
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Filters every channel of `epoch` with `filter` in the given mode.
pub fn filter_epoch(
    filter: &IirFilter,
    epoch: &Epoch,
    mode: FilterMode,
) -> Result<Epoch, DspError> {
    if epoch.fs != filter.fs {
        return Err(DspError::RateMismatch { expected: filter.fs, got: epoch.fs });
    }
    let mut out = epoch.clone();
    for c in 0..epoch.n_channels() {
        let x: Vec<f64> = epoch.data.row(c).iter().copied().collect();
        let y = match mode {
            FilterMode::Causal => filter.apply_channel(&x),
            FilterMode::ZeroPhase => filter.apply_channel_zero_phase(&x),
        };
        for (s, v) in y.into_iter().enumerate() {
            out.data[(c, s)] = v;
        }
    }
    Ok(out)
}

/// Filters every epoch of `set`; trials are independent, so they are
/// processed in parallel with order-stable assembly of the result.
pub fn filter_set(
    filter: &IirFilter,
    set: &EpochSet,
    mode: FilterMode,
) -> Result<EpochSet, DspError> {
    use rayon::prelude::*;
    let filtered: Result<Vec<Epoch>, DspError> = set
        .epochs()
        .par_iter()
        .map(|e| filter_epoch(filter, e, mode))
        .collect();
    Ok(set.with_epochs(filtered?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::Label;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn default_filter() -> IirFilter {
        design_butterworth_bandpass(5, 8.0, 30.0, 256.0).unwrap()
    }

    /// Amplitude of a steady sinusoid estimated as RMS·√2 over the tail.
    fn tail_amplitude(y: &[f64], fs: f64, tail_s: f64) -> f64 {
        let n = (tail_s * fs) as usize;
        let tail = &y[y.len() - n..];
        let ms = tail.iter().map(|v| v * v).sum::<f64>() / n as f64;
        (2.0 * ms).sqrt()
    }

    fn sinusoid(f: f64, fs: f64, secs: f64) -> Vec<f64> {
        let n = (secs * fs) as usize;
        (0..n).map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / fs).sin()).collect()
    }

    #[test]
    fn design_validates_parameters() {
        assert!(matches!(
            design_butterworth_bandpass(0, 8.0, 30.0, 256.0),
            Err(DspError::InvalidOrder(0))
        ));
        for (lo, hi) in [(30.0, 8.0), (0.0, 30.0), (-1.0, 30.0), (8.0, 128.0), (8.0, 200.0)] {
            assert!(
                matches!(
                    design_butterworth_bandpass(5, lo, hi, 256.0),
                    Err(DspError::InvalidBand { .. })
                ),
                "band {lo}-{hi} accepted"
            );
        }
    }

    #[test]
    fn default_design_has_five_stable_sections() {
        let f = default_filter();
        assert_eq!(f.sections().len(), 5);
        assert!(f.is_stable());
        for s in f.sections() {
            assert!(s.pole_radius() < 1.0);
        }
    }

    #[test]
    fn band_edges_sit_at_minus_3_db() {
        let f = default_filter();
        // Prewarping places the −3 dB points exactly on the edges; allow a
        // tight numerical margin, well inside the ±0.5 dB contract.
        assert!((f.magnitude_db_at(8.0) + 3.0103).abs() < 0.05);
        assert!((f.magnitude_db_at(30.0) + 3.0103).abs() < 0.05);
    }

    #[test]
    fn stopband_attenuation_exceeds_40_db() {
        let f = default_filter();
        for freq in [0.1, 2.0, 60.0] {
            assert!(
                f.magnitude_db_at(freq) <= -40.0,
                "only {:.1} dB at {freq} Hz",
                f.magnitude_db_at(freq)
            );
        }
    }

    #[test]
    fn passband_is_unimodal_within_ripple_budget() {
        let f = default_filter();
        let grid: Vec<f64> = (0..=220).map(|i| 8.0 + i as f64 * 0.1).collect();
        let mags: Vec<f64> = grid.iter().map(|&x| f.magnitude_db_at(x)).collect();
        let peak = mags.iter().cloned().fold(f64::MIN, f64::max);
        let peak_idx = mags.iter().position(|&m| m == peak).unwrap();
        // Rising to the peak, then falling; 0.01 dB ripple allowance.
        for w in mags[..=peak_idx].windows(2) {
            assert!(w[1] >= w[0] - 0.01);
        }
        for w in mags[peak_idx..].windows(2) {
            assert!(w[1] <= w[0] + 0.01);
        }
        assert!((peak).abs() < 0.01, "peak gain {peak} dB should be ~0 dB");
    }

    #[test]
    fn passband_sinusoid_passes_within_one_percent() {
        let f = default_filter();
        let y = f.apply_channel(&sinusoid(20.0, 256.0, 4.0));
        let amp = tail_amplitude(&y, 256.0, 2.0);
        assert!((amp - 1.0).abs() < 0.01, "20 Hz amplitude {amp}");
    }

    #[test]
    fn stopband_sinusoid_is_suppressed_below_five_percent() {
        let f = default_filter();
        let y = f.apply_channel(&sinusoid(2.0, 256.0, 4.0));
        let amp = tail_amplitude(&y, 256.0, 2.0);
        assert!(amp < 0.05, "2 Hz amplitude {amp}");
    }

    #[test]
    fn causal_filtering_is_prefix_stable() {
        // Filtering a prefix must equal the prefix of filtering the whole
        // signal, bit for bit — this is what makes offline filtering a valid
        // stand-in for sample-by-sample streaming.
        let f = default_filter();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..512).map(|_| rng.random_range(-1.0..1.0)).collect();
        let full = f.apply_channel(&x);
        for k in [1usize, 13, 100, 511] {
            assert_eq!(f.apply_channel(&x[..k]), full[..k]);
        }
    }

    #[test]
    fn filtering_is_linear() {
        let f = default_filter();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (a, b) = (1.7, -0.4);
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
        for mode in [FilterMode::Causal, FilterMode::ZeroPhase] {
            let lhs = match mode {
                FilterMode::Causal => f.apply_channel(&mixed),
                FilterMode::ZeroPhase => f.apply_channel_zero_phase(&mixed),
            };
            let (fx, fy) = match mode {
                FilterMode::Causal => (f.apply_channel(&x), f.apply_channel(&y)),
                FilterMode::ZeroPhase => {
                    (f.apply_channel_zero_phase(&x), f.apply_channel_zero_phase(&y))
                }
            };
            for i in 0..400 {
                let want = a * fx[i] + b * fy[i];
                assert!(
                    (lhs[i] - want).abs() <= 1e-9 * want.abs().max(1.0),
                    "{mode:?} sample {i}: {} vs {want}",
                    lhs[i]
                );
            }
        }
    }

    #[test]
    fn zero_phase_preserves_pulse_position() {
        // A symmetric in-band wave packet must keep its envelope peak in
        // place (±1 sample) under zero-phase filtering.
        let fs = 256.0;
        let t0 = 2.0;
        let x: Vec<f64> = (0..(4.0 * fs) as usize)
            .map(|i| {
                let t = i as f64 / fs;
                let env = (-(t - t0) * (t - t0) / (2.0 * 0.1 * 0.1)).exp();
                env * (2.0 * std::f64::consts::PI * 15.0 * (t - t0)).cos()
            })
            .collect();
        let f = default_filter();
        let y = f.apply_channel_zero_phase(&x);
        let peak_in = (t0 * fs) as usize;
        let peak_out = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        assert!(
            (peak_out as isize - peak_in as isize).abs() <= 1,
            "peak moved from {peak_in} to {peak_out}"
        );
        // And the causal pass, for contrast, must delay it.
        let yc = f.apply_channel(&x);
        let peak_causal = yc
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        assert!(peak_causal > peak_in + 1);
    }

    #[test]
    fn zero_phase_handles_short_signals() {
        let f = default_filter();
        assert!(f.apply_channel_zero_phase(&[]).is_empty());
        assert_eq!(f.apply_channel_zero_phase(&[1.0]).len(), 1);
        assert_eq!(f.apply_channel_zero_phase(&[1.0, -1.0, 0.5]).len(), 3);
    }

    #[test]
    fn filter_epoch_checks_sampling_rate() {
        let f = default_filter();
        let e = Epoch::new(DMatrix::zeros(2, 64), 512.0, Label::Left);
        assert!(matches!(
            filter_epoch(&f, &e, FilterMode::Causal),
            Err(DspError::RateMismatch { .. })
        ));
    }

    #[test]
    fn filter_epoch_filters_every_channel() {
        let f = default_filter();
        let fs = 256.0;
        let data = DMatrix::from_fn(3, 1024, |c, s| {
            let t = s as f64 / fs;
            (2.0 * std::f64::consts::PI * (10.0 + 5.0 * c as f64) * t).sin()
        });
        let e = Epoch::new(data, fs, Label::Right);
        let out = filter_epoch(&f, &e, FilterMode::Causal).unwrap();
        for c in 0..3 {
            let row: Vec<f64> = e.data.row(c).iter().copied().collect();
            assert_eq!(
                out.data.row(c).iter().copied().collect::<Vec<f64>>(),
                f.apply_channel(&row)
            );
        }
        assert_eq!(out.label, e.label);
        assert_eq!(out.fs, e.fs);
    }

    #[test]
    fn narrower_band_is_more_selective() {
        // Sanity on the design math: a 10–14 Hz filter passes 12 Hz but
        // rejects 20 Hz, while the default band passes both.
        let narrow = design_butterworth_bandpass(5, 10.0, 14.0, 256.0).unwrap();
        assert!(narrow.magnitude_at(12.0) > 0.9);
        assert!(narrow.magnitude_at(20.0) < 0.05);
    }
}
