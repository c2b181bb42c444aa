//! WAV and EMA CSV readers and writers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::ema::{EmaRecording, SENSOR_CHANNELS};
use crate::error::{Error, Result};

/// Write mono 16-bit PCM.
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let io_err = |e: hound::Error| Error::io(path, std::io::Error::other(e.to_string()));
    let mut writer = hound::WavWriter::create(path, spec).map_err(io_err)?;
    for s in samples {
        let q = (s.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16;
        writer.write_sample(q).map_err(io_err)?;
    }
    writer.finalize().map_err(io_err)
}

/// Read a mono WAV file as samples in [-1, 1] plus its sample rate.
pub fn read_wav(path: &Path) -> std::result::Result<(Vec<f64>, u32), String> {
    let mut reader = hound::WavReader::open(path).map_err(|e| e.to_string())?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(format!("expected mono audio, found {} channels", spec.channels));
    }
    let samples = match spec.sample_format {
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<Vec<_>, _>>()
        }
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<Vec<_>, _>>(),
    }
    .map_err(|e| e.to_string())?;
    Ok((samples, spec.sample_rate))
}

/// EMA trajectories as CSV with the twelve canonical channel names as header.
pub fn write_ema_csv(path: &Path, data: &Array2<f64>) -> Result<()> {
    let mut out = SENSOR_CHANNELS.join(",");
    out.push('\n');
    for row in data.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub enum EmaReadError {
    Io(String),
    Schema(String),
}

/// Parse an EMA CSV. The header must name exactly the twelve canonical channels.
pub fn read_ema_csv(path: &Path, sample_rate: f64) -> std::result::Result<EmaRecording, EmaReadError> {
    let text = fs::read_to_string(path).map_err(|e| EmaReadError::Io(e.to_string()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| EmaReadError::Schema("empty EMA file".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if header.len() != SENSOR_CHANNELS.len() {
        return Err(EmaReadError::Schema(format!(
            "EMA header has {} channels, expected {}",
            header.len(),
            SENSOR_CHANNELS.len()
        )));
    }
    let mut channels: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for name in &header {
        if !SENSOR_CHANNELS.contains(&name.as_str()) {
            return Err(EmaReadError::Schema(format!("unknown EMA channel {name}")));
        }
        if channels.insert(name.clone(), Vec::new()).is_some() {
            return Err(EmaReadError::Schema(format!("duplicate EMA channel {name}")));
        }
    }
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(EmaReadError::Schema(format!(
                "row {} has {} fields, expected {}",
                lineno + 2,
                fields.len(),
                header.len()
            )));
        }
        for (name, field) in header.iter().zip(fields) {
            let v: f64 = field.trim().parse().map_err(|_| {
                EmaReadError::Schema(format!("row {}: bad number {field:?}", lineno + 2))
            })?;
            channels.get_mut(name).unwrap().push(v);
        }
    }
    EmaRecording::from_channels(&channels, sample_rate).map_err(|e| EmaReadError::Schema(e.to_string()))
}
