//! On-disk corpus format, loading and the synthetic corpus generator.

mod files;
mod manifest;
mod matrix;
mod synth;

pub use files::{read_ema_csv, read_wav, write_ema_csv, write_wav};
pub use manifest::{CorpusManifest, SpeakerEntry, UtteranceEntry};
pub use matrix::{format_matrix, parse_matrix, read_matrix, write_matrix, MatrixFile};
pub use synth::{energy_fraction_above, generate_synthetic_corpus, two_corpus_synthesis, SyntheticSpec, AUDIO_RATE};

use std::path::{Path, PathBuf};

use crate::ema::EmaRecording;
use crate::error::{Error, Result};
use crate::frontend::{normalize_waveform, Waveform};

pub const MANIFEST_FILE: &str = "manifest.json";

/// One parallel audio/EMA recording.
#[derive(Debug, Clone)]
pub struct UtteranceRecord {
    pub id: String,
    pub speaker: String,
    pub corpus: String,
    pub waveform: Waveform,
    pub ema: EmaRecording,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    pub root: PathBuf,
    pub utterances: Vec<UtteranceRecord>,
}

/// Load every utterance listed in the manifest. `path` may name the manifest
/// file or the directory containing it.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let manifest_path = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let manifest = CorpusManifest::read(&manifest_path)?;
    let root = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut utterances = Vec::with_capacity(manifest.utterances.len());
    for entry in &manifest.utterances {
        let load_err = |reason: String| Error::Load {
            id: entry.id.clone(),
            reason,
        };
        let speaker = manifest
            .speaker(&entry.speaker)
            .expect("validated manifest references known speakers");
        let (raw, rate) = read_wav(&root.join(&entry.audio))
            .map_err(|e| load_err(format!("audio {}: {e}", entry.audio)))?;
        let waveform = normalize_waveform(&raw, rate)
            .map_err(|e| load_err(format!("audio {}: {e}", entry.audio)))?;
        let ema = match read_ema_csv(&root.join(&entry.ema), speaker.ema_sample_rate) {
            Ok(r) => r,
            Err(files::EmaReadError::Io(e)) => return Err(load_err(format!("EMA {}: {e}", entry.ema))),
            Err(files::EmaReadError::Schema(e)) => {
                return Err(Error::Schema(format!("utterance {}: {e}", entry.id)))
            }
        };
        utterances.push(UtteranceRecord {
            id: entry.id.clone(),
            speaker: entry.speaker.clone(),
            corpus: manifest.corpus.clone(),
            waveform,
            ema,
        });
    }
    Ok(Corpus {
        manifest,
        root,
        utterances,
    })
}
