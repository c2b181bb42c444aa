use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode};
use super::dataset::UtteranceMeta;
use crate::error::{Error, Result};

pub const TRAIN_FRACTION: f64 = 0.7;
pub const VALIDATION_FRACTION: f64 = 0.1;

/// Disjoint train/validation/test utterance ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

fn shuffled(mut ids: Vec<String>, seed: u64) -> Vec<String> {
    ids.sort();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids
}

/// 70/10/20 over one pool.
fn three_way(ids: Vec<String>, seed: u64) -> DataSplit {
    let n = ids.len();
    let n_train = (TRAIN_FRACTION * n as f64).round() as usize;
    let n_val = ((VALIDATION_FRACTION * n as f64).round() as usize).min(n - n_train);
    let ids = shuffled(ids, seed);
    DataSplit {
        train: ids[..n_train].to_vec(),
        validation: ids[n_train..n_train + n_val].to_vec(),
        test: ids[n_train + n_val..].to_vec(),
    }
}

/// Train/validation at 70:10 over a pool whose test set lives elsewhere.
fn two_way(ids: Vec<String>, test: Vec<String>, seed: u64) -> DataSplit {
    let n = ids.len();
    let ratio = VALIDATION_FRACTION / (TRAIN_FRACTION + VALIDATION_FRACTION);
    let n_val = ((ratio * n as f64).round() as usize).min(n);
    let ids = shuffled(ids, seed);
    let mut test = test;
    test.sort();
    DataSplit {
        train: ids[n_val..].to_vec(),
        validation: ids[..n_val].to_vec(),
        test,
    }
}

fn ids_where(metas: &[UtteranceMeta], f: impl Fn(&UtteranceMeta) -> bool) -> Vec<String> {
    metas.iter().filter(|m| f(m)).map(|m| m.id.clone()).collect()
}

/// Partition utterances according to the experiment mode.
pub fn make_split(metas: &[UtteranceMeta], cfg: &ExperimentConfig) -> Result<DataSplit> {
    cfg.validate()?;
    let in_corpus = |m: &UtteranceMeta, c: &Option<String>| c.as_ref().is_none_or(|c| &m.corpus == c);
    let known = |what: &str, value: &str, present: bool| {
        if present {
            Ok(())
        } else {
            Err(Error::Selector(format!("unknown {what} {value}")))
        }
    };
    if let Some(c) = &cfg.corpus {
        known("corpus", c, metas.iter().any(|m| &m.corpus == c))?;
    }
    if let Some(c) = &cfg.test_corpus {
        known("corpus", c, metas.iter().any(|m| &m.corpus == c))?;
    }
    let split = match cfg.mode {
        Mode::SD => {
            let spk = cfg.speaker.as_deref().unwrap_or_default();
            let pool = ids_where(metas, |m| m.speaker == spk && in_corpus(m, &cfg.corpus));
            known("speaker", spk, !pool.is_empty())?;
            three_way(pool, cfg.seed)
        }
        Mode::SI => {
            let spk = cfg.speaker.as_deref().unwrap_or_default();
            let test = ids_where(metas, |m| m.speaker == spk && in_corpus(m, &cfg.corpus));
            known("speaker", spk, !test.is_empty())?;
            let pool = ids_where(metas, |m| m.speaker != spk && in_corpus(m, &cfg.corpus));
            two_way(pool, test, cfg.seed)
        }
        Mode::CD => three_way(ids_where(metas, |m| in_corpus(m, &cfg.corpus)), cfg.seed),
        Mode::CC => {
            let pool = ids_where(metas, |m| in_corpus(m, &cfg.corpus));
            let test = ids_where(metas, |m| in_corpus(m, &cfg.test_corpus));
            two_way(pool, test, cfg.seed)
        }
    };
    for (name, part) in [
        ("training", &split.train),
        ("validation", &split.validation),
        ("test", &split.test),
    ] {
        if part.is_empty() {
            return Err(Error::Selector(format!(
                "{} split leaves the {name} set empty",
                cfg.mode
            )));
        }
    }
    Ok(split)
}
