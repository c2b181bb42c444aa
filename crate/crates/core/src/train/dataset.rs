use ndarray::Array2;

use crate::corpus::Corpus;
use crate::ema::{finalize_targets, prepare_targets, ChannelStats, LaMode};
use crate::error::{Error, Result};
use crate::frontend::{extract_with_config, FeatureConfig};

/// Features and pre-normalization targets of one utterance, frame-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedUtterance {
    pub id: String,
    pub speaker: String,
    pub corpus: String,
    /// `T × 429`
    pub acoustic: Array2<f64>,
    /// `T × 16`, in mm / tract-variable units.
    pub targets: Array2<f64>,
    pub frame_rate: f64,
}

impl PreparedUtterance {
    pub fn len(&self) -> usize {
        self.acoustic.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.acoustic.nrows() == 0
    }
}

/// Utterance with normalized, smoothed targets ready for training or scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingUtterance {
    pub id: String,
    pub acoustic: Array2<f64>,
    /// `T × 16`, z-scored then smoothed.
    pub targets: Array2<f64>,
}

impl TrainingUtterance {
    pub fn len(&self) -> usize {
        self.acoustic.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.acoustic.nrows() == 0
    }
}

/// Identity of an utterance for split construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtteranceMeta {
    pub id: String,
    pub speaker: String,
    pub corpus: String,
}

/// All utterances of one or more corpora after feature extraction.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub utterances: Vec<PreparedUtterance>,
    /// Utterances skipped during preparation with the reason.
    pub flagged: Vec<(String, String)>,
}

impl Dataset {
    /// Extract acoustic features and pre-normalization targets. Utterances
    /// whose targets cannot be formed (negative lip-aperture radicand,
    /// degenerate tongue coordinates) are flagged and skipped.
    pub fn build(corpora: &[Corpus], features: &FeatureConfig, la_mode: LaMode) -> Result<Self> {
        let mut ds = Dataset::default();
        for corpus in corpora {
            for rec in &corpus.utterances {
                let acoustic = extract_with_config(&rec.waveform, features)?;
                let frames = acoustic.len();
                let frame_rate = acoustic.frame_rate();
                match prepare_targets(&rec.ema, frames, frame_rate, la_mode) {
                    Ok(targets) => ds.utterances.push(PreparedUtterance {
                        id: rec.id.clone(),
                        speaker: rec.speaker.clone(),
                        corpus: rec.corpus.clone(),
                        acoustic: acoustic.into_frames(),
                        targets,
                        frame_rate,
                    }),
                    Err(e @ (Error::NegativeRadicand { .. } | Error::DegenerateCoordinate)) => {
                        log::warn!("utterance {} flagged: {e}", rec.id);
                        ds.flagged.push((rec.id.clone(), e.to_string()));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(ds)
    }

    pub fn metas(&self) -> Vec<UtteranceMeta> {
        self.utterances
            .iter()
            .map(|u| UtteranceMeta {
                id: u.id.clone(),
                speaker: u.speaker.clone(),
                corpus: u.corpus.clone(),
            })
            .collect()
    }

    pub fn get(&self, id: &str) -> Option<&PreparedUtterance> {
        self.utterances.iter().find(|u| u.id == id)
    }

    pub fn select(&self, ids: &[String]) -> Result<Vec<&PreparedUtterance>> {
        ids.iter()
            .map(|id| {
                self.get(id)
                    .ok_or_else(|| Error::Selector(format!("unknown utterance {id}")))
            })
            .collect()
    }
}

/// Normalize and smooth targets with `stats`.
pub fn finalize(items: &[&PreparedUtterance], stats: &ChannelStats) -> Result<Vec<TrainingUtterance>> {
    items
        .iter()
        .map(|u| {
            let seq = finalize_targets(u.targets.view(), stats, u.frame_rate)?;
            Ok(TrainingUtterance {
                id: u.id.clone(),
                acoustic: u.acoustic.clone(),
                targets: seq.into_frames(),
            })
        })
        .collect()
}
