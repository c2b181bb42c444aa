//! Deterministic inputs shared by the benchmarks.

use artinv_core::frontend::{normalize_waveform, Waveform, ACOUSTIC_DIM};
use ndarray::Array2;

/// A two-tone test signal of `seconds` at 16 kHz.
pub fn test_waveform(seconds: f64) -> Waveform {
    let rate = 16_000u32;
    let n = (seconds * rate as f64) as usize;
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            0.5 * (2.0 * std::f64::consts::PI * 440.0 * t).sin()
                + 0.2 * (2.0 * std::f64::consts::PI * 1_250.0 * t).sin()
        })
        .collect();
    normalize_waveform(&samples, rate).expect("valid waveform")
}

/// Bounded pseudo-random acoustic frames.
pub fn acoustic_frames(frames: usize) -> Array2<f64> {
    Array2::from_shape_fn((frames, ACOUSTIC_DIM), |(t, d)| {
        ((t * 7919 + d * 104_729) % 1000) as f64 / 500.0 - 1.0
    })
}
