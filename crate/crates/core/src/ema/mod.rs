//! EMA preprocessing: smoothing, tract variables, synchronization with the
//! acoustic frame rate and z-score normalization.

mod filter;
mod tract;

pub use filter::{design_windowed_sinc, lowpass, SincKernel};
pub use tract::{constriction_location, lip_aperture, lip_protrusion, LaMode};

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical sensor channel order: upper lip, lower lip, lower incisor,
/// tongue tip, tongue body, tongue dorsum.
pub const SENSOR_CHANNELS: [&str; 12] = [
    "UL_x", "UL_y", "LL_x", "LL_y", "LI_x", "LI_y", "TT_x", "TT_y", "TB_x", "TB_y", "TD_x", "TD_y",
];

/// Sensor channels followed by the four tract variables.
pub const TARGET_CHANNELS: [&str; 16] = [
    "UL_x", "UL_y", "LL_x", "LL_y", "LI_x", "LI_y", "TT_x", "TT_y", "TB_x", "TB_y", "TD_x", "TD_y",
    "TTCL", "TBCL", "LA", "LP",
];

pub const N_SENSORS: usize = SENSOR_CHANNELS.len();
pub const N_TARGETS: usize = TARGET_CHANNELS.len();

/// Smoothing cutoff applied to articulatory trajectories.
pub const SMOOTHING_CUTOFF_HZ: f64 = 25.0;
pub const SMOOTHING_TAPS: usize = 50;

const UL_X: usize = 0;
const UL_Y: usize = 1;
const LL_X: usize = 2;
const LL_Y: usize = 3;
const TT_X: usize = 6;
const TT_Y: usize = 7;
const TB_X: usize = 8;
const TB_Y: usize = 9;

/// Twelve sensor trajectories in mm at a common sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EmaRecording {
    /// `samples × 12`, columns in [`SENSOR_CHANNELS`] order.
    data: Array2<f64>,
    sample_rate: f64,
}

impl EmaRecording {
    pub fn new(data: Array2<f64>, sample_rate: f64) -> Result<Self> {
        if data.ncols() != N_SENSORS {
            return Err(Error::Schema(format!(
                "EMA recording has {} channels, expected {N_SENSORS}",
                data.ncols()
            )));
        }
        if data.nrows() == 0 {
            return Err(Error::Schema("EMA recording is empty".into()));
        }
        if !(sample_rate > 0.0) {
            return Err(Error::Schema(format!("invalid EMA sample rate {sample_rate}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema("EMA recording contains non-finite values".into()));
        }
        Ok(Self { data, sample_rate })
    }

    /// Build from named channels; all twelve names must be present with equal lengths.
    pub fn from_channels(channels: &BTreeMap<String, Vec<f64>>, sample_rate: f64) -> Result<Self> {
        let mut len = None;
        for name in SENSOR_CHANNELS {
            let ch = channels
                .get(name)
                .ok_or_else(|| Error::Schema(format!("missing EMA channel {name}")))?;
            match len {
                None => len = Some(ch.len()),
                Some(l) if l != ch.len() => {
                    return Err(Error::Schema(format!(
                        "EMA channel {name} has {} samples, expected {l}",
                        ch.len()
                    )))
                }
                _ => {}
            }
        }
        let len = len.unwrap_or(0);
        let data = Array2::from_shape_fn((len, N_SENSORS), |(t, c)| channels[SENSOR_CHANNELS[c]][t]);
        Self::new(data, sample_rate)
    }

    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }
}

/// Frame-synchronized 16-channel articulatory targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ArticulatorySequence {
    frames: Array2<f64>,
    frame_rate: f64,
}

impl ArticulatorySequence {
    pub fn new(frames: Array2<f64>, frame_rate: f64) -> Result<Self> {
        if frames.ncols() != N_TARGETS {
            return Err(Error::shape(format!(
                "articulatory sequence has {} columns, expected {N_TARGETS}",
                frames.ncols()
            )));
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite articulatory value".into()));
        }
        Ok(Self { frames, frame_rate })
    }

    pub fn frames(&self) -> &Array2<f64> {
        &self.frames
    }

    pub fn into_frames(self) -> Array2<f64> {
        self.frames
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    pub fn channel_names(&self) -> &'static [&'static str] {
        &TARGET_CHANNELS
    }
}

/// Linearly interpolate `traj` (sampled at `source_rate`) onto the grid
/// `j / target_rate`, `j = 0..target_len`. Times past the last sample hold it.
pub fn resample_to_frame_rate(
    traj: &[f64],
    source_rate: f64,
    target_rate: f64,
    target_len: usize,
) -> Result<Vec<f64>> {
    if traj.is_empty() {
        return Err(Error::shape("cannot resample an empty trajectory"));
    }
    let last = traj.len() - 1;
    Ok((0..target_len)
        .map(|j| {
            let pos = j as f64 * source_rate / target_rate;
            let i0 = pos.floor() as usize;
            if i0 >= last {
                return traj[last];
            }
            let frac = pos - i0 as f64;
            if frac == 0.0 {
                traj[i0]
            } else {
                traj[i0] + frac * (traj[i0 + 1] - traj[i0])
            }
        })
        .collect())
}

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    /// Fit on the rows of every sequence pooled together.
    pub fn fit<'a>(seqs: impl IntoIterator<Item = ArrayView2<'a, f64>>) -> Result<Self> {
        let mut sum = vec![0.0; N_TARGETS];
        let mut count = 0usize;
        let views: Vec<_> = seqs.into_iter().collect();
        for v in &views {
            check_width(v)?;
            for row in v.rows() {
                for (s, x) in sum.iter_mut().zip(row) {
                    *s += x;
                }
            }
            count += v.nrows();
        }
        if count == 0 {
            return Err(Error::shape("cannot fit channel statistics on zero frames"));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let mut sq = vec![0.0; N_TARGETS];
        for v in &views {
            for row in v.rows() {
                for ((s, x), m) in sq.iter_mut().zip(row).zip(&mean) {
                    *s += (x - m) * (x - m);
                }
            }
        }
        let std: Vec<f64> = sq.iter().map(|s| (s / count as f64).sqrt()).collect();
        for (c, s) in std.iter().enumerate() {
            if !(*s > 1e-12) {
                return Err(Error::ConstantChannel {
                    channel: TARGET_CHANNELS[c].to_string(),
                });
            }
        }
        Ok(Self {
            names: TARGET_CHANNELS.iter().map(|s| s.to_string()).collect(),
            mean,
            std,
        })
    }

    pub fn apply(&self, seq: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_width(&seq)?;
        let mut out = seq.to_owned();
        for mut row in out.rows_mut() {
            for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *x = (*x - m) / s;
            }
        }
        Ok(out)
    }

    pub fn invert(&self, seq: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_width(&seq)?;
        let mut out = seq.to_owned();
        for mut row in out.rows_mut() {
            for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *x = *x * s + m;
            }
        }
        Ok(out)
    }
}

fn check_width(v: &ArrayView2<f64>) -> Result<()> {
    if v.ncols() != N_TARGETS {
        return Err(Error::shape(format!(
            "expected {N_TARGETS} articulatory channels, got {}",
            v.ncols()
        )));
    }
    Ok(())
}

/// Normalize `seq`, fitting statistics on it when none are given.
pub fn zscore_fit_apply(
    seq: ArrayView2<f64>,
    stats: Option<&ChannelStats>,
) -> Result<(Array2<f64>, ChannelStats)> {
    let stats = match stats {
        Some(s) => s.clone(),
        None => ChannelStats::fit([seq])?,
    };
    Ok((stats.apply(seq)?, stats))
}

fn smoothing_kernel(sample_rate: f64) -> Result<SincKernel> {
    design_windowed_sinc(SMOOTHING_CUTOFF_HZ, sample_rate, SMOOTHING_TAPS)
}

fn lowpass_columns(data: &mut Array2<f64>, kernel: &SincKernel) {
    for mut col in data.columns_mut() {
        let filtered = lowpass(&col.to_vec(), kernel);
        for (dst, v) in col.iter_mut().zip(filtered) {
            *dst = v;
        }
    }
}

/// Pre-normalization stage: smooth at the native rate, derive the tract
/// variables and resample all sixteen channels to `frames` rows at `frame_rate`.
pub fn prepare_targets(
    rec: &EmaRecording,
    frames: usize,
    frame_rate: f64,
    la_mode: LaMode,
) -> Result<Array2<f64>> {
    let mut smoothed = rec.data.clone();
    lowpass_columns(&mut smoothed, &smoothing_kernel(rec.sample_rate)?);

    let n = smoothed.nrows();
    let mut full = Array2::zeros((n, N_TARGETS));
    for t in 0..n {
        let r = smoothed.row(t);
        for c in 0..N_SENSORS {
            full[[t, c]] = r[c];
        }
        full[[t, 12]] = constriction_location(r[TT_X], r[TT_Y])?;
        full[[t, 13]] = constriction_location(r[TB_X], r[TB_Y])?;
        full[[t, 14]] = lip_aperture((r[UL_X], r[UL_Y]), (r[LL_X], r[LL_Y]), la_mode)?;
        full[[t, 15]] = lip_protrusion(r[UL_X], r[LL_X]);
    }

    let mut out = Array2::zeros((frames, N_TARGETS));
    for c in 0..N_TARGETS {
        let col = full.column(c).to_vec();
        let resampled = resample_to_frame_rate(&col, rec.sample_rate, frame_rate, frames)?;
        for (t, v) in resampled.into_iter().enumerate() {
            out[[t, c]] = v;
        }
    }
    Ok(out)
}

/// Post-normalization stage: z-score with `stats`, then smooth again at the frame rate.
pub fn finalize_targets(
    prepared: ArrayView2<f64>,
    stats: &ChannelStats,
    frame_rate: f64,
) -> Result<ArticulatorySequence> {
    let mut normalized = stats.apply(prepared)?;
    lowpass_columns(&mut normalized, &smoothing_kernel(frame_rate)?);
    ArticulatorySequence::new(normalized, frame_rate)
}

/// Complete target construction for one recording. Statistics are fitted on
/// this recording when `stats` is `None`; pass training-set statistics otherwise.
pub fn build_targets(
    rec: &EmaRecording,
    frames: usize,
    frame_rate: f64,
    la_mode: LaMode,
    stats: Option<&ChannelStats>,
) -> Result<(ArticulatorySequence, ChannelStats)> {
    let prepared = prepare_targets(rec, frames, frame_rate, la_mode)?;
    let stats = match stats {
        Some(s) => s.clone(),
        None => ChannelStats::fit([prepared.view()])?,
    };
    let seq = finalize_targets(prepared.view(), &stats, frame_rate)?;
    Ok((seq, stats))
}
