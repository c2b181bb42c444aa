use std::time::{Duration, Instant};

use ndarray::{s, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{optimizer_step, AdamConfig, AdamState};
use super::batch::make_batches;
use super::config::ExperimentConfig;
use super::dataset::{finalize, Dataset, TrainingUtterance};
use super::early::{Decision, EarlyStopping};
use super::split::{make_split, DataSplit};
use crate::ema::{ChannelStats, TARGET_CHANNELS};
use crate::error::{Error, Result};
use crate::metrics::{EvalMeta, EvalReport, Scored};
use crate::net::{accumulate_sequence, GradientSet, InversionModel, Params};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Mean per-channel correlation on the validation set.
    pub val_pcc: f64,
}

/// Training history. `wall_time` is informational and excluded from
/// equality and serialization so that reports of identical runs compare equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stop_epoch: usize,
    pub early_stopped: bool,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl PartialEq for TrainReport {
    fn eq(&self, other: &Self) -> bool {
        self.epochs == other.epochs
            && self.best_epoch == other.best_epoch
            && self.best_val_loss.to_bits() == other.best_val_loss.to_bits()
            && self.stop_epoch == other.stop_epoch
            && self.early_stopped == other.early_stopped
    }
}

impl TrainReport {
    pub fn epoch(&self, n: usize) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.epoch == n)
    }
}

/// Everything produced by one experiment run.
#[derive(Debug, Clone)]
pub struct TrainedExperiment {
    pub model: InversionModel,
    pub report: TrainReport,
    pub split: DataSplit,
    pub stats: ChannelStats,
    pub train_set: Vec<TrainingUtterance>,
    pub validation_set: Vec<TrainingUtterance>,
    pub test_set: Vec<TrainingUtterance>,
}

impl TrainedExperiment {
    pub fn meta(&self, cfg: &ExperimentConfig) -> EvalMeta {
        EvalMeta {
            mode: cfg.mode.to_string(),
            speaker: cfg.speaker.clone(),
            corpus: cfg.test_corpus.clone().or_else(|| cfg.corpus.clone()),
        }
    }
}

/// Pair every training input with the targets of a different utterance,
/// truncating both to the shorter length.
fn shuffle_labels(items: &mut [TrainingUtterance], seed: u64) {
    let n = items.len();
    if n < 2 {
        return;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1abe));
    let targets: Vec<Array2<f64>> = items.iter().map(|u| u.targets.clone()).collect();
    for k in 0..n {
        let (dst, src) = (order[k], order[(k + 1) % n]);
        let len = items[dst].len().min(targets[src].nrows());
        let u = &mut items[dst];
        u.acoustic = u.acoustic.slice(s![..len, ..]).to_owned();
        u.targets = targets[src].slice(s![..len, ..]).to_owned();
    }
}

/// Mean squared error per frame and channel over a set of utterances, and the
/// mean per-channel correlation.
pub fn dataset_loss(model: &InversionModel, items: &[TrainingUtterance]) -> Result<(f64, f64)> {
    let mut sse = 0.0;
    let mut count = 0usize;
    let mut preds = Vec::with_capacity(items.len());
    for u in items {
        let p = model.forward(u.acoustic.view())?;
        sse += (&p.smoothed - &u.targets).iter().map(|d| d * d).sum::<f64>();
        count += u.targets.len();
        preds.push(p.smoothed);
    }
    if count == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let pairs: Vec<Scored<'_>> = items
        .iter()
        .zip(&preds)
        .map(|(u, p)| Scored {
            id: &u.id,
            target: u.targets.view(),
            prediction: p.view(),
        })
        .collect();
    let report = EvalReport::from_pairs(&TARGET_CHANNELS, &pairs, EvalMeta::default())?;
    Ok((sse / count as f64, report.mean_pcc))
}

fn clip(grad: &mut GradientSet, max_norm: Option<f64>) {
    if let Some(max) = max_norm {
        let norm = grad.l2_norm();
        if norm > max {
            grad.scale(max / norm);
        }
    }
}

/// Train on already finalized sets. Returns the best-validation model.
pub fn fit(
    cfg: &ExperimentConfig,
    train_set: &[TrainingUtterance],
    validation_set: &[TrainingUtterance],
    stats: &ChannelStats,
) -> Result<(InversionModel, TrainReport)> {
    cfg.validate()?;
    if train_set.is_empty() || validation_set.is_empty() {
        return Err(Error::Selector("training and validation sets must be non-empty".into()));
    }
    let started = Instant::now();
    let mut model = InversionModel::init(&cfg.model, cfg.seed, cfg.smoother_mode)?;
    model.stats = Some(stats.clone());
    let adam = AdamConfig {
        learning_rate: cfg.learning_rate,
        ..AdamConfig::default()
    };
    let mut state = AdamState::default();
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best: Params = model.params.clone();
    let mut epochs = Vec::new();
    let mut early_stopped = false;
    let out_dim = cfg.model.output_dim;

    for epoch in 1..=cfg.max_epochs {
        let numerical = |e: Error| match e {
            Error::Numerical(msg) => Error::Numerical(format!("epoch {epoch}: {msg}")),
            other => other,
        };
        let mut epoch_sse = 0.0;
        let mut epoch_count = 0usize;
        for batch in make_batches(train_set, cfg.batch_size, cfg.seed, epoch)? {
            let frames: usize = batch.lengths.iter().sum();
            if frames == 0 {
                return Err(Error::EmptyBatch);
            }
            let scale = 1.0 / (frames * out_dim) as f64;
            let mut grad = GradientSet::zeros_for(&model);
            for (k, &len) in batch.lengths.iter().enumerate() {
                epoch_sse += accumulate_sequence(
                    &model,
                    batch.inputs.slice(s![k, ..len, ..]),
                    batch.targets.slice(s![k, ..len, ..]),
                    scale,
                    &mut grad,
                )?;
            }
            epoch_count += frames * out_dim;
            clip(&mut grad, cfg.grad_clip);
            optimizer_step(&mut model, &grad, &mut state, &adam).map_err(numerical)?;
        }
        let train_loss = epoch_sse / epoch_count as f64;
        let (val_loss, val_pcc) = dataset_loss(&model, validation_set)?;
        if !val_loss.is_finite() {
            return Err(Error::Numerical(format!("epoch {epoch}: validation loss is {val_loss}")));
        }
        log::info!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5} pcc {val_pcc:.4}");
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_pcc,
        });
        match stopper.update(epoch, val_loss) {
            Decision::Improved => best = model.params.clone(),
            Decision::Continue => {}
            Decision::Stop => {
                early_stopped = true;
                break;
            }
        }
    }
    model.params = best;
    let stop_epoch = epochs.last().map_or(0, |e| e.epoch);
    let report = TrainReport {
        epochs,
        best_epoch: stopper.best_epoch(),
        best_val_loss: stopper.best(),
        stop_epoch,
        early_stopped,
        wall_time: started.elapsed(),
    };
    Ok((model, report))
}

/// Split `data` according to `cfg`, fit target statistics on the training
/// utterances and train.
pub fn run_experiment(cfg: &ExperimentConfig, data: &Dataset) -> Result<TrainedExperiment> {
    let split = make_split(&data.metas(), cfg)?;
    let train_raw = data.select(&split.train)?;
    let stats = ChannelStats::fit(train_raw.iter().map(|u| u.targets.view()))?;
    let mut train_set = finalize(&train_raw, &stats)?;
    let validation_set = finalize(&data.select(&split.validation)?, &stats)?;
    let test_set = finalize(&data.select(&split.test)?, &stats)?;
    if cfg.shuffle_labels {
        shuffle_labels(&mut train_set, cfg.seed);
    }
    let (model, report) = fit(cfg, &train_set, &validation_set, &stats)?;
    Ok(TrainedExperiment {
        model,
        report,
        split,
        stats,
        train_set,
        validation_set,
        test_set,
    })
}

/// Train according to `cfg` and return the best-validation model.
pub fn train(cfg: &ExperimentConfig, data: &Dataset) -> Result<(InversionModel, TrainReport)> {
    let run = run_experiment(cfg, data)?;
    Ok((run.model, run.report))
}
