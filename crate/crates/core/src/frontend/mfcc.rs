//! Mel-frequency cepstral coefficients for a single analysis frame.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

/// Per-frame analysis window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hamming,
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        if len == 1 {
            return vec![1.0];
        }
        let denom = (len - 1) as f64;
        (0..len)
            .map(|n| {
                let phase = 2.0 * PI * n as f64 / denom;
                match self {
                    WindowKind::Hamming => 0.54 - 0.46 * phase.cos(),
                    WindowKind::Hann => 0.5 * (1.0 - phase.cos()),
                    WindowKind::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MfccConfig {
    pub fft_size: usize,
    pub n_mels: usize,
    pub n_coeffs: usize,
    pub f_min: f64,
    /// Upper filterbank edge; `None` means Nyquist.
    pub f_max: Option<f64>,
    pub log_floor: f64,
    pub window: WindowKind,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            fft_size: 512,
            n_mels: 26,
            n_coeffs: 13,
            f_min: 0.0,
            f_max: None,
            log_floor: 1e-10,
            window: WindowKind::Hamming,
        }
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters over the magnitude-spectrum bins, `n_mels × (fft_size/2 + 1)`.
fn mel_filterbank(cfg: &MfccConfig, sample_rate: f64) -> Vec<Vec<f64>> {
    let n_bins = cfg.fft_size / 2 + 1;
    let f_max = cfg.f_max.unwrap_or(sample_rate / 2.0);
    let (lo, hi) = (hz_to_mel(cfg.f_min), hz_to_mel(f_max));
    let edges: Vec<f64> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect();
    (0..cfg.n_mels)
        .map(|m| {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..n_bins)
                .map(|k| {
                    let f = k as f64 * sample_rate / cfg.fft_size as f64;
                    let up = (f - left) / (center - left);
                    let down = (right - f) / (right - center);
                    up.min(down).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II basis rows `0..n_coeffs` over `n_in` inputs.
fn dct2_basis(n_coeffs: usize, n_in: usize) -> Vec<Vec<f64>> {
    (0..n_coeffs)
        .map(|j| {
            let scale = if j == 0 {
                (1.0 / n_in as f64).sqrt()
            } else {
                (2.0 / n_in as f64).sqrt()
            };
            (0..n_in)
                .map(|m| scale * (PI * j as f64 * (m as f64 + 0.5) / n_in as f64).cos())
                .collect()
        })
        .collect()
}

/// Precomputed MFCC pipeline: window, FFT plan, filterbank and DCT basis.
pub struct MfccExtractor {
    cfg: MfccConfig,
    frame_len: usize,
    window: Vec<f64>,
    filterbank: Vec<Vec<f64>>,
    dct: Vec<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor")
            .field("cfg", &self.cfg)
            .field("frame_len", &self.frame_len)
            .finish()
    }
}

impl MfccExtractor {
    /// Panics if `frame_len` exceeds the FFT size.
    pub fn new(cfg: MfccConfig, sample_rate: f64, frame_len: usize) -> Self {
        assert!(
            frame_len <= cfg.fft_size,
            "frame of {frame_len} samples does not fit a {}-point FFT",
            cfg.fft_size
        );
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
        Self {
            window: cfg.window.coefficients(frame_len),
            filterbank: mel_filterbank(&cfg, sample_rate),
            dct: dct2_basis(cfg.n_coeffs, cfg.n_mels),
            frame_len,
            fft,
            cfg,
        }
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    pub fn n_coeffs(&self) -> usize {
        self.cfg.n_coeffs
    }

    /// Log mel filterbank energies (natural log, floored).
    pub fn log_mel(&self, frame: &[f64]) -> Vec<f64> {
        assert_eq!(frame.len(), self.frame_len, "frame length mismatch");
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .zip(&self.window)
            .map(|(&x, &w)| Complex::new(x * w, 0.0))
            .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
            .take(self.cfg.fft_size)
            .collect();
        self.fft.process(&mut buf);
        let magnitude: Vec<f64> = buf[..self.cfg.fft_size / 2 + 1]
            .iter()
            .map(|c| c.norm())
            .collect();
        self.filterbank
            .iter()
            .map(|filter| {
                let energy: f64 = filter.iter().zip(&magnitude).map(|(w, m)| w * m).sum();
                energy.max(self.cfg.log_floor).ln()
            })
            .collect()
    }

    pub fn compute(&self, frame: &[f64]) -> Vec<f64> {
        let log_mel = self.log_mel(frame);
        self.dct
            .iter()
            .map(|row| row.iter().zip(&log_mel).map(|(b, l)| b * l).sum())
            .collect()
    }
}

/// MFCCs of one 400-sample frame at 16 kHz with the default configuration.
pub fn mfcc(frame: &[f64]) -> Vec<f64> {
    MfccExtractor::new(MfccConfig::default(), 16_000.0, frame.len()).compute(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silent_frame_is_floor_constant() {
        let c = mfcc(&[0.0; 400]);
        assert_eq!(c.len(), 13);
        let expected_c0 = (26f64).sqrt() * 1e-10f64.ln();
        assert!((c[0] - expected_c0).abs() < 1e-9, "{}", c[0]);
        for v in &c[1..] {
            assert!(v.abs() < 1e-9);
        }
    }

    // Values from an independent NumPy implementation of the same textbook pipeline.
    #[test]
    fn sinusoid_matches_reference() {
        let frame: Vec<f64> = (0..400)
            .map(|n| (2.0 * PI * 1000.0 * n as f64 / 16_000.0).sin())
            .collect();
        let reference = [
            -0.44912627775258235,
            4.113632171478534,
            -3.10551797824926,
            -3.7576857032643245,
            -1.0851461730521421,
            1.6943558469307192,
            2.346751463886803,
            0.5093093030237587,
            -1.5140377637465618,
            -1.8056897657229611,
            -0.19187230787036866,
            1.4226708994541977,
            1.4731882704132668,
        ];
        let c = mfcc(&frame);
        for (got, want) in c.iter().zip(reference) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn sign_flip_leaves_coefficients_unchanged() {
        let frame: Vec<f64> = (0..400).map(|n| ((n * 7919) % 101) as f64 / 101.0 - 0.5).collect();
        let flipped: Vec<f64> = frame.iter().map(|x| -x).collect();
        let (a, b) = (mfcc(&frame), mfcc(&flipped));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mel_scale_round_trips() {
        for hz in [0.0, 100.0, 1000.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
    }
}
