//! Data splits, batching, optimization and the experiment harness.

mod adam;
mod batch;
mod config;
mod dataset;
mod early;
mod grid;
mod loss;
mod split;
mod trainer;

pub use adam::{optimizer_step, AdamConfig, AdamState};
pub use batch::{make_batches, plan_batches, Batch, BUCKET_FRAMES};
pub use config::{ExperimentConfig, Mode};
pub use dataset::{finalize, Dataset, PreparedUtterance, TrainingUtterance, UtteranceMeta};
pub use early::{Decision, EarlyStopping};
pub use grid::{run_experiment_grid, GridRow, GridTable};
pub use loss::masked_mse;
pub use split::{make_split, DataSplit, TRAIN_FRACTION, VALIDATION_FRACTION};
pub use trainer::{dataset_loss, fit, run_experiment, train, EpochRecord, TrainReport, TrainedExperiment};
