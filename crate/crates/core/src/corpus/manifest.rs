use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeakerEntry {
    pub id: String,
    pub dialect: String,
    /// Hz
    pub ema_sample_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceEntry {
    pub id: String,
    pub speaker: String,
    /// Relative to the manifest directory.
    pub audio: String,
    /// Relative to the manifest directory.
    pub ema: String,
    /// Seconds.
    pub duration: f64,
}

/// Corpus index stored as `manifest.json` next to the audio and EMA folders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub corpus: String,
    pub speakers: Vec<SpeakerEntry>,
    pub utterances: Vec<UtteranceEntry>,
}

impl CorpusManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn speaker(&self, id: &str) -> Option<&SpeakerEntry> {
        self.speakers.iter().find(|s| s.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        let mut speakers = HashSet::new();
        for s in &self.speakers {
            if !speakers.insert(s.id.as_str()) {
                return Err(Error::Schema(format!("duplicate speaker id {}", s.id)));
            }
            if !(s.ema_sample_rate > 0.0) {
                return Err(Error::Schema(format!(
                    "speaker {} has invalid EMA sample rate {}",
                    s.id, s.ema_sample_rate
                )));
            }
        }
        let mut ids = HashSet::new();
        for u in &self.utterances {
            if !ids.insert(u.id.as_str()) {
                return Err(Error::Schema(format!("duplicate utterance id {}", u.id)));
            }
            if !speakers.contains(u.speaker.as_str()) {
                return Err(Error::Schema(format!(
                    "utterance {} references unknown speaker {}",
                    u.id, u.speaker
                )));
            }
            if !(u.duration > 0.0) {
                return Err(Error::Schema(format!("utterance {} has non-positive duration", u.id)));
            }
        }
        Ok(())
    }
}
