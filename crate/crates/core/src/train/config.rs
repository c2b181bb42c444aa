use serde::{Deserialize, Serialize};

use crate::ema::LaMode;
use crate::error::{Error, Result};
use crate::frontend::FeatureConfig;
use crate::net::{ModelConfig, SmootherMode};

/// Train/test regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Speaker dependent: one speaker, 70/10/20.
    SD,
    /// Speaker independent: train on the other speakers, test on one held out.
    SI,
    /// Corpus dependent: one corpus, 70/10/20.
    CD,
    /// Cross corpus: train on one corpus, test on all of another.
    CC,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::SD => "SD",
            Mode::SI => "SI",
            Mode::CD => "CD",
            Mode::CC => "CC",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// SD: the speaker. SI: the held-out test speaker.
    pub speaker: Option<String>,
    /// SD/SI: optional corpus restriction. CD: the corpus. CC: the training corpus.
    pub corpus: Option<String>,
    /// CC only.
    pub test_corpus: Option<String>,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    /// Rescale the batch gradient when its L2 norm exceeds this value.
    pub grad_clip: Option<f64>,
    pub seed: u64,
    pub smoother_mode: SmootherMode,
    pub la_mode: LaMode,
    /// Control run: pair each training input with another utterance's targets.
    pub shuffle_labels: bool,
    pub model: ModelConfig,
    pub features: FeatureConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::SD,
            speaker: None,
            corpus: None,
            test_corpus: None,
            batch_size: 8,
            max_epochs: 50,
            patience: 7,
            learning_rate: 1e-3,
            grad_clip: None,
            seed: 0,
            smoother_mode: SmootherMode::Fixed,
            la_mode: LaMode::Literal,
            shuffle_labels: false,
            model: ModelConfig::default(),
            features: FeatureConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.max_epochs == 0 || self.patience >= self.max_epochs {
            return Err(Error::Config(format!(
                "need 0 <= patience < max_epochs, got patience={} max_epochs={}",
                self.patience, self.max_epochs
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return Err(Error::Config("grad_clip must be positive".into()));
            }
        }
        self.model.validate()?;
        let need = |field: &Option<String>, name: &str| {
            field
                .as_ref()
                .map(|_| ())
                .ok_or_else(|| Error::Config(format!("mode {} requires `{name}`", self.mode)))
        };
        match self.mode {
            Mode::SD | Mode::SI => need(&self.speaker, "speaker")?,
            Mode::CD => need(&self.corpus, "corpus")?,
            Mode::CC => {
                need(&self.corpus, "corpus")?;
                need(&self.test_corpus, "test_corpus")?;
                if self.corpus == self.test_corpus {
                    return Err(Error::Config("CC mode needs two different corpora".into()));
                }
            }
        }
        if self.mode != Mode::CC && self.test_corpus.is_some() {
            return Err(Error::Config("`test_corpus` is only valid in CC mode".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
