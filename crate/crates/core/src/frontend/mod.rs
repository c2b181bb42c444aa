//! Acoustic front end: waveform normalization, framing, MFCC with deltas and
//! context stacking into the 429-dimensional network input.

mod mfcc;

pub use mfcc::{hz_to_mel, mel_to_hz, mfcc, MfccConfig, MfccExtractor, WindowKind};

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// MFCCs per frame.
pub const N_MFCC: usize = 13;
/// MFCC + delta + delta-delta.
pub const FRAME_DIM: usize = 3 * N_MFCC;
pub const CONTEXT_HALF_WINDOW: usize = 5;
/// Width of one context-stacked acoustic vector (11 frames of 39 features).
pub const ACOUSTIC_DIM: usize = FRAME_DIM * (2 * CONTEXT_HALF_WINDOW + 1);

/// Mono audio, peak-normalized to ±0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Scale `raw` so the largest magnitude is exactly 0.5.
///
/// The signal is first brought into [-1, 1] by its peak and then halved.
pub fn normalize_waveform(raw: &[f64], sample_rate: u32) -> Result<Waveform> {
    if sample_rate == 0 {
        return Err(Error::DegenerateSignal("sample rate is zero".into()));
    }
    if raw.is_empty() {
        return Err(Error::DegenerateSignal("empty waveform".into()));
    }
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateSignal("non-finite sample".into()));
    }
    let peak = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return Err(Error::DegenerateSignal("all samples are zero".into()));
    }
    let samples = raw.iter().map(|x| 0.5 * (x / peak)).collect();
    Ok(Waveform {
        samples,
        sample_rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSpec {
    /// Seconds.
    pub frame_length: f64,
    /// Seconds.
    pub hop: f64,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            frame_length: 0.025,
            hop: 0.010,
        }
    }
}

impl FrameSpec {
    pub fn frame_samples(&self, sample_rate: u32) -> usize {
        (self.frame_length * sample_rate as f64).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        (self.hop * sample_rate as f64).round() as usize
    }

    pub fn frame_rate(&self) -> f64 {
        1.0 / self.hop
    }

    /// Number of complete frames in `len` samples, zero if none fits.
    pub fn frame_count(&self, len: usize, sample_rate: u32) -> usize {
        let (frame, hop) = (self.frame_samples(sample_rate), self.hop_samples(sample_rate));
        if len < frame {
            0
        } else {
            (len - frame) / hop + 1
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.hop > 0.0 && self.hop <= self.frame_length) {
            return Err(Error::Config(format!(
                "frame spec requires 0 < hop <= frame_length, got hop={} frame_length={}",
                self.hop, self.frame_length
            )));
        }
        Ok(())
    }
}

/// Split a waveform into overlapping frames; frame `i` starts at sample `i * hop`.
pub fn frame_signal(w: &Waveform, spec: &FrameSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let frame = spec.frame_samples(w.sample_rate);
    let hop = spec.hop_samples(w.sample_rate);
    if frame == 0 || hop == 0 {
        return Err(Error::Config("frame or hop shorter than one sample".into()));
    }
    let count = spec.frame_count(w.samples.len(), w.sample_rate);
    if count == 0 {
        return Err(Error::TooShort {
            len: w.samples.len(),
            needed: frame,
        });
    }
    Ok((0..count)
        .map(|i| w.samples[i * hop..i * hop + frame].to_vec())
        .collect())
}

/// Regression deltas along time with replicate padding:
/// `d_t = Σ n (c_{t+n} - c_{t-n}) / (2 Σ n²)`, `n = 1..=half_window`.
pub fn regression_delta(coeffs: ArrayView2<f64>, half_window: usize) -> Array2<f64> {
    let (t_len, dim) = coeffs.dim();
    let mut out = Array2::zeros((t_len, dim));
    if t_len == 0 || half_window == 0 {
        return out;
    }
    let norm = 2.0 * (1..=half_window).map(|n| (n * n) as f64).sum::<f64>();
    let last = t_len as isize - 1;
    let clamp = |i: isize| i.clamp(0, last) as usize;
    for t in 0..t_len {
        for n in 1..=half_window {
            let ahead = coeffs.row(clamp(t as isize + n as isize));
            let behind = coeffs.row(clamp(t as isize - n as isize));
            let mut row = out.row_mut(t);
            for d in 0..dim {
                row[d] += n as f64 * (ahead[d] - behind[d]);
            }
        }
    }
    out.mapv_inplace(|v| v / norm);
    out
}

/// First (`order = 1`) or second (`order = 2`) order deltas with half-window 2.
pub fn delta_features(coeffs: ArrayView2<f64>, order: u8) -> Result<Array2<f64>> {
    match order {
        1 => Ok(regression_delta(coeffs, 2)),
        2 => Ok(regression_delta(regression_delta(coeffs, 2).view(), 2)),
        other => Err(Error::Config(format!("delta order must be 1 or 2, got {other}"))),
    }
}

/// Context-stacked acoustic features, one row per 10 ms frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticSequence {
    frames: Array2<f64>,
    frame_rate: f64,
}

impl AcousticSequence {
    pub fn new(frames: Array2<f64>, frame_rate: f64) -> Result<Self> {
        if frames.nrows() == 0 {
            return Err(Error::shape("acoustic sequence has no frames"));
        }
        if frames.ncols() != ACOUSTIC_DIM {
            return Err(Error::shape(format!(
                "acoustic sequence has {} columns, expected {ACOUSTIC_DIM}",
                frames.ncols()
            )));
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite acoustic feature".into()));
        }
        Ok(Self { frames, frame_rate })
    }

    pub fn frames(&self) -> &Array2<f64> {
        &self.frames
    }

    pub fn into_frames(self) -> Array2<f64> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }
}

/// Concatenate rows `t-h..=t+h` (replicate-padded) into one row per frame.
pub fn stack_context(features: ArrayView2<f64>, half_window: usize) -> Array2<f64> {
    let (t_len, dim) = features.dim();
    let width = 2 * half_window + 1;
    let mut out = Array2::zeros((t_len, dim * width));
    let last = t_len as isize - 1;
    for t in 0..t_len {
        for (slot, offset) in (-(half_window as isize)..=half_window as isize).enumerate() {
            let src = (t as isize + offset).clamp(0, last) as usize;
            out.slice_mut(s![t, slot * dim..(slot + 1) * dim])
                .assign(&features.row(src));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub frame: FrameSpec,
    pub mfcc: MfccConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame: FrameSpec::default(),
            mfcc: MfccConfig::default(),
        }
    }
}

/// Full pipeline: frame → MFCC → Δ, ΔΔ → ±5 frame context.
pub fn extract_acoustic_features(w: &Waveform) -> Result<AcousticSequence> {
    extract_with_config(w, &FeatureConfig::default())
}

pub fn extract_with_config(w: &Waveform, cfg: &FeatureConfig) -> Result<AcousticSequence> {
    if cfg.mfcc.n_coeffs != N_MFCC {
        return Err(Error::Config(format!(
            "network input expects {N_MFCC} cepstral coefficients, config asks for {}",
            cfg.mfcc.n_coeffs
        )));
    }
    let frames = frame_signal(w, &cfg.frame)?;
    let frame_len = frames[0].len();
    if frame_len > cfg.mfcc.fft_size {
        return Err(Error::Config(format!(
            "frame of {frame_len} samples exceeds FFT size {}",
            cfg.mfcc.fft_size
        )));
    }
    let extractor = MfccExtractor::new(cfg.mfcc.clone(), w.sample_rate as f64, frame_len);
    let mut ceps = Array2::zeros((frames.len(), N_MFCC));
    for (t, frame) in frames.iter().enumerate() {
        for (d, v) in extractor.compute(frame).into_iter().enumerate() {
            ceps[[t, d]] = v;
        }
    }
    let d1 = delta_features(ceps.view(), 1)?;
    let d2 = regression_delta(d1.view(), 2);
    let mut per_frame = Array2::zeros((frames.len(), FRAME_DIM));
    per_frame.slice_mut(s![.., ..N_MFCC]).assign(&ceps);
    per_frame.slice_mut(s![.., N_MFCC..2 * N_MFCC]).assign(&d1);
    per_frame.slice_mut(s![.., 2 * N_MFCC..]).assign(&d2);
    let stacked = stack_context(per_frame.view(), CONTEXT_HALF_WINDOW);
    AcousticSequence::new(stacked, cfg.frame.frame_rate())
}
