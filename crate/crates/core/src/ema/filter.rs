use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{Error, Result};

/// Windowed-sinc low-pass kernel with unit DC gain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SincKernel {
    taps: Vec<f64>,
    /// Cutoff as a fraction of the sample rate (cycles/sample).
    cutoff_norm: f64,
}

impl SincKernel {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn cutoff_norm(&self) -> f64 {
        self.cutoff_norm
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hann-windowed sinc low-pass, normalized to unit tap sum.
///
/// `h[i] = sinc(2 fc/fs (i - (N-1)/2))`, `w[i] = 0.5 (1 - cos(2π i/(N-1)))`.
pub fn design_windowed_sinc(cutoff_hz: f64, sample_rate: f64, n_taps: usize) -> Result<SincKernel> {
    let nyquist = sample_rate / 2.0;
    if !(cutoff_hz > 0.0 && cutoff_hz < nyquist) {
        return Err(Error::InvalidCutoff {
            cutoff_hz,
            nyquist_hz: nyquist,
        });
    }
    // Two Hann taps are both zero, so the shortest usable kernel has three.
    if n_taps < 3 {
        return Err(Error::InvalidTaps(n_taps));
    }
    let fc = cutoff_hz / sample_rate;
    let center = (n_taps - 1) as f64 / 2.0;
    let denom = (n_taps - 1) as f64;
    let raw: Vec<f64> = (0..n_taps)
        .map(|i| {
            let h = sinc(2.0 * fc * (i as f64 - center));
            let w = 0.5 * (1.0 - (2.0 * PI * i as f64 / denom).cos());
            h * w
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    let mut taps: Vec<f64> = raw.iter().map(|v| v / sum).collect();
    // Pairwise rounding can differ by an ulp; mirror to keep exact symmetry.
    for i in 0..n_taps / 2 {
        taps[n_taps - 1 - i] = taps[i];
    }
    Ok(SincKernel {
        taps,
        cutoff_norm: fc,
    })
}

/// Same-length filtering with reflect padding at both ends.
pub fn lowpass(trajectory: &[f64], kernel: &SincKernel) -> Vec<f64> {
    if trajectory.is_empty() {
        return Vec::new();
    }
    dsp::filter_same_reflect(trajectory, &kernel.taps)
}
