//! Synthetic parallel articulatory/acoustic corpus.
//!
//! Each utterance draws twelve smooth sensor trajectories (sums of a few
//! sinusoids below the band limit), maps the articulatory state every 10 ms
//! through a seeded `tanh(A u + b)` map onto a 13-term cepstral spectral
//! envelope, and drives a harmonic-plus-noise synthesizer at 16 kHz with it.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::files::{write_ema_csv, write_wav};
use super::manifest::{CorpusManifest, SpeakerEntry, UtteranceEntry};
use crate::ema::N_SENSORS;
use crate::error::{Error, Result};
use crate::frontend::{hz_to_mel, N_MFCC};

pub const AUDIO_RATE: u32 = 16_000;
const CONTROL_RATE: f64 = 100.0;
const MAX_SINUSOIDS: usize = 8;
const MIN_SINUSOIDS: usize = 3;
const MAX_HARMONIC_HZ: f64 = 7_800.0;
/// Scale of the articulatory-to-envelope map; keeps `tanh` out of saturation.
const MAP_GAIN: f64 = 0.8;
/// Fixed output gain, so frame energy stays informative across utterances.
const OUTPUT_GAIN: f64 = 0.0025;

/// Rest pose in mm, canonical sensor order.
const NEUTRAL_POSE: [f64; N_SENSORS] = [
    5.0, 14.0, 4.0, -14.0, 2.0, -15.0, 15.0, 5.0, 30.0, 12.0, 45.0, 9.0,
];
/// Typical excursion per channel in mm.
const EXCURSION: [f64; N_SENSORS] = [2.0, 2.5, 2.0, 3.0, 1.5, 2.5, 4.0, 4.0, 4.0, 4.0, 3.0, 3.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub corpus: String,
    pub n_speakers: usize,
    pub utterances_per_speaker: usize,
    /// Seconds, `[min, max]`.
    pub duration_range: [f64; 2],
    /// Highest trajectory frequency in Hz; kept below the 25 Hz smoothing cutoff.
    pub band_limit_hz: f64,
    /// Trajectory draws.
    pub seed: u64,
    /// Forward map, speaker traits and voice parameters.
    pub map_seed: u64,
    /// Standard deviation of additive white noise relative to the harmonic level.
    pub noise_level: f64,
    pub ema_sample_rate: f64,
    /// Offset added to every sensor coordinate (mm).
    pub global_offset_mm: f64,
    /// Standard deviation of per-speaker pose offsets (mm).
    pub speaker_offset_mm: f64,
    /// Relative size of the per-speaker perturbation of the forward map.
    pub speaker_map_variation: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            corpus: "synth".into(),
            n_speakers: 1,
            utterances_per_speaker: 20,
            duration_range: [1.8, 2.2],
            band_limit_hz: 8.0,
            seed: 1,
            map_seed: 1,
            noise_level: 0.02,
            ema_sample_rate: 100.0,
            global_offset_mm: 0.0,
            speaker_offset_mm: 1.5,
            speaker_map_variation: 0.6,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_speakers == 0 || self.utterances_per_speaker == 0 {
            return Err(Error::Config("synthetic corpus needs positive counts".into()));
        }
        if !(self.band_limit_hz > 0.0 && self.band_limit_hz <= 15.0) {
            return Err(Error::Config(format!(
                "band limit {} Hz must lie in (0, 15]",
                self.band_limit_hz
            )));
        }
        if 2.0 * self.band_limit_hz >= self.ema_sample_rate {
            return Err(Error::Config("EMA rate too low for the band limit".into()));
        }
        let [lo, hi] = self.duration_range;
        if !(lo > 0.05 && hi >= lo) {
            return Err(Error::Config(format!("invalid duration range [{lo}, {hi}]")));
        }
        if self.noise_level < 0.0 {
            return Err(Error::Config("noise level must be non-negative".into()));
        }
        Ok(())
    }

    pub fn speaker_id(&self, s: usize) -> String {
        format!("{}_spk{s:02}", self.corpus)
    }
}

/// Fixed articulatory-to-envelope map for one speaker.
struct Voice {
    weights: Array2<f64>,
    bias: Array1<f64>,
    pose_offset: [f64; N_SENSORS],
    f0: f64,
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> Array2<f64> {
    let normal = Normal::new(0.0, std).expect("positive std");
    Array2::from_shape_fn((rows, cols), |_| normal.sample(rng))
}

/// Gram-Schmidt on the columns of `m`.
fn orthonormal_columns(mut m: Array2<f64>) -> Array2<f64> {
    for j in 0..m.ncols() {
        for i in 0..j {
            let proj = m.column(i).dot(&m.column(j));
            let prev = m.column(i).to_owned();
            m.column_mut(j).scaled_add(-proj, &prev);
        }
        let norm = m.column(j).dot(&m.column(j)).sqrt();
        m.column_mut(j).mapv_inplace(|v| v / norm);
    }
    m
}

fn voices(spec: &SyntheticSpec) -> Vec<Voice> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.map_seed);
    let base_w = gaussian_matrix(&mut rng, N_MFCC, N_SENSORS, 1.5 / (N_SENSORS as f64).sqrt());
    let base_b = gaussian_matrix(&mut rng, N_MFCC, 1, 0.2).column(0).to_owned();
    (0..spec.n_speakers)
        .map(|s| {
            let mut srng = ChaCha8Rng::seed_from_u64(spec.map_seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(s as u64 + 1)));
            let pert = gaussian_matrix(&mut srng, N_MFCC, N_SENSORS, 1.5 / (N_SENSORS as f64).sqrt());
            let weights = orthonormal_columns(&base_w + &(pert * spec.speaker_map_variation)) * MAP_GAIN;
            let bias = &base_b + &(gaussian_matrix(&mut srng, N_MFCC, 1, 0.1).column(0).to_owned() * spec.speaker_map_variation);
            let mut pose_offset = [0.0; N_SENSORS];
            for v in pose_offset.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut srng);
                *v = z * spec.speaker_offset_mm + spec.global_offset_mm;
            }
            Voice {
                weights,
                bias,
                pose_offset,
                f0: srng.random_range(100.0..180.0),
            }
        })
        .collect()
}

/// Sum-of-sinusoids trajectory description for one channel.
struct Trajectory {
    offset: f64,
    terms: Vec<(f64, f64, f64)>,
}

impl Trajectory {
    fn at(&self, t: f64) -> f64 {
        self.offset
            + self
                .terms
                .iter()
                .map(|(amp, freq, phase)| amp * (2.0 * PI * freq * t + phase).sin())
                .sum::<f64>()
    }
}

fn draw_trajectories(rng: &mut ChaCha8Rng, spec: &SyntheticSpec, voice: &Voice) -> Vec<Trajectory> {
    (0..N_SENSORS)
        .map(|c| {
            let k = rng.random_range(MIN_SINUSOIDS..=MAX_SINUSOIDS);
            let terms = (0..k)
                .map(|_| {
                    let amp = rng.random_range(0.4..1.0) * EXCURSION[c] / (k as f64).sqrt() * 1.4;
                    let freq = rng.random_range(0.3..spec.band_limit_hz);
                    let phase = rng.random_range(0.0..2.0 * PI);
                    (amp, freq, phase)
                })
                .collect();
            Trajectory {
                offset: NEUTRAL_POSE[c] + voice.pose_offset[c],
                terms,
            }
        })
        .collect()
}

/// Log-amplitude envelope at `freq` for envelope code `code`.
fn log_envelope(code: &[f64], freq: f64, mel_max: f64) -> f64 {
    let x = hz_to_mel(freq) / mel_max;
    let tilt = -1.5 * x;
    tilt + code
        .iter()
        .enumerate()
        .map(|(k, e)| e * (PI * k as f64 * x).cos())
        .sum::<f64>()
}

fn envelope_code(voice: &Voice, articulators: &[f64; N_SENSORS]) -> Vec<f64> {
    let u = Array1::from_iter((0..N_SENSORS).map(|c| (articulators[c] - NEUTRAL_POSE[c]) / EXCURSION[c]));
    let z = voice.weights.dot(&u) + &voice.bias;
    z.iter().map(|v| v.tanh()).collect()
}

struct Rendered {
    audio: Vec<f64>,
    ema: Array2<f64>,
}

fn render(rng: &mut ChaCha8Rng, spec: &SyntheticSpec, voice: &Voice, duration: f64) -> Rendered {
    let trajectories = draw_trajectories(rng, spec, voice);
    let state_at = |t: f64| {
        let mut a = [0.0; N_SENSORS];
        for (c, tr) in trajectories.iter().enumerate() {
            a[c] = tr.at(t);
        }
        a
    };

    let n_ema = (duration * spec.ema_sample_rate).round() as usize;
    let ema = Array2::from_shape_fn((n_ema, N_SENSORS), |(i, c)| {
        trajectories[c].at(i as f64 / spec.ema_sample_rate)
    });

    let n_audio = (duration * AUDIO_RATE as f64).round() as usize;
    let n_control = (duration * CONTROL_RATE).ceil() as usize + 2;
    let vibrato_phase = rng.random_range(0.0..2.0 * PI);
    let f0_at = |t: f64| voice.f0 * (1.0 + 0.03 * (2.0 * PI * 0.7 * t + vibrato_phase).sin());
    let n_harm = (MAX_HARMONIC_HZ / (voice.f0 * 0.97)).floor() as usize;
    let mel_max = hz_to_mel(AUDIO_RATE as f64 / 2.0);

    // Harmonic amplitudes at the control rate.
    let mut amps = Array2::<f64>::zeros((n_control, n_harm));
    for k in 0..n_control {
        let t = k as f64 / CONTROL_RATE;
        let code = envelope_code(voice, &state_at(t));
        let f0 = f0_at(t);
        for j in 0..n_harm {
            let f = f0 * (j + 1) as f64;
            if f < MAX_HARMONIC_HZ {
                amps[[k, j]] = log_envelope(&code, f, mel_max).exp();
            }
        }
    }

    let normal = Normal::new(0.0, spec.noise_level.max(0.0)).expect("valid noise level");
    let mut phases = vec![0.0f64; n_harm];
    let mut audio = Vec::with_capacity(n_audio);
    let samples_per_control = AUDIO_RATE as f64 / CONTROL_RATE;
    for n in 0..n_audio {
        let t = n as f64 / AUDIO_RATE as f64;
        let pos = n as f64 / samples_per_control;
        let k0 = pos.floor() as usize;
        let frac = pos - k0 as f64;
        let f0 = f0_at(t);
        let mut s = 0.0;
        for j in 0..n_harm {
            let a = amps[[k0, j]] * (1.0 - frac) + amps[[k0 + 1, j]] * frac;
            phases[j] = (phases[j] + 2.0 * PI * f0 * (j + 1) as f64 / AUDIO_RATE as f64) % (2.0 * PI);
            if a > 0.0 {
                s += a * phases[j].sin();
            }
        }
        let noise = if spec.noise_level > 0.0 { normal.sample(rng) } else { 0.0 };
        audio.push(s + noise);
    }
    audio.iter_mut().for_each(|v| *v *= OUTPUT_GAIN);
    let peak = audio.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.99 {
        audio.iter_mut().for_each(|v| *v *= 0.99 / peak);
    }
    Rendered { audio, ema }
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Write a synthetic corpus under `out_dir` and return its manifest. The
/// manifest is written last.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec, out_dir: &Path) -> Result<CorpusManifest> {
    spec.validate()?;
    create_dir(&out_dir.join("audio"))?;
    create_dir(&out_dir.join("ema"))?;
    let voices = voices(spec);
    let mut speakers = Vec::new();
    let mut utterances = Vec::new();
    for (s, voice) in voices.iter().enumerate() {
        let speaker = spec.speaker_id(s);
        speakers.push(SpeakerEntry {
            id: speaker.clone(),
            dialect: spec.corpus.clone(),
            ema_sample_rate: spec.ema_sample_rate,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(1_000_003).wrapping_add(s as u64));
        for u in 0..spec.utterances_per_speaker {
            let [lo, hi] = spec.duration_range;
            let duration = if hi > lo { rng.random_range(lo..hi) } else { lo };
            let duration = (duration * 100.0).round() / 100.0;
            let rendered = render(&mut rng, spec, voice, duration);
            let id = format!("{speaker}_u{u:03}");
            let audio = format!("audio/{id}.wav");
            let ema = format!("ema/{id}.csv");
            write_wav(&out_dir.join(&audio), &rendered.audio, AUDIO_RATE)?;
            write_ema_csv(&out_dir.join(&ema), &rendered.ema)?;
            utterances.push(UtteranceEntry {
                id,
                speaker: speaker.clone(),
                audio,
                ema,
                duration,
            });
        }
    }
    let manifest = CorpusManifest {
        corpus: spec.corpus.clone(),
        speakers,
        utterances,
    };
    manifest.write(&out_dir.join(super::MANIFEST_FILE))?;
    Ok(manifest)
}

/// Two corpora for cross-corpus experiments. `spec_b` is expected to differ
/// from `spec_a` in its map seed and global offset; identical settings give
/// two corpora drawn from the same domain.
pub fn two_corpus_synthesis(
    spec_a: &SyntheticSpec,
    spec_b: &SyntheticSpec,
    dir_a: &Path,
    dir_b: &Path,
) -> Result<(CorpusManifest, CorpusManifest)> {
    if spec_a.corpus == spec_b.corpus {
        return Err(Error::Config("the two corpora need distinct names".into()));
    }
    Ok((
        generate_synthetic_corpus(spec_a, dir_a)?,
        generate_synthetic_corpus(spec_b, dir_b)?,
    ))
}

/// Band-limit check helper: fraction of (mean-removed, Hann-windowed) energy
/// above `cutoff_hz`. The window keeps edge leakage out of the upper bins.
pub fn energy_fraction_above(signal: &[f64], sample_rate: f64, cutoff_hz: f64) -> f64 {
    let n = signal.len();
    let mean = signal.iter().sum::<f64>() / n as f64;
    let windowed: Vec<f64> = signal
        .iter()
        .enumerate()
        .map(|(i, x)| (x - mean) * 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
        .collect();
    let (mut total, mut above) = (0.0, 0.0);
    for k in 0..=n / 2 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, x) in windowed.iter().enumerate() {
            let ph = 2.0 * PI * (k * i) as f64 / n as f64;
            re += x * ph.cos();
            im -= x * ph.sin();
        }
        let e = re * re + im * im;
        total += e;
        if k as f64 * sample_rate / n as f64 > cutoff_hz {
            above += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        above / total
    }
}
