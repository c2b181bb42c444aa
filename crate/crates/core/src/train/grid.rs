use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode};
use super::dataset::Dataset;
use super::trainer::run_experiment;
use crate::metrics::evaluate;
use crate::net::SmootherMode;

/// One row of the results table. Failed runs carry the error and NaN scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub mode: Mode,
    pub batch: usize,
    pub smoother: SmootherMode,
    pub rmse_mm: f64,
    pub pcc: f64,
    pub stop_epoch: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub rows: Vec<GridRow>,
}

impl GridTable {
    pub const HEADER: &'static str = "mode,batch,smoother,rmse_mm,pcc,stop_epoch";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::HEADER);
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.mode, r.batch, r.smoother, r.rmse_mm, r.pcc, r.stop_epoch
            ));
        }
        out
    }
}

/// Train and evaluate every configuration in turn. A failing configuration
/// is recorded in its row and does not stop the grid.
pub fn run_experiment_grid(cfgs: &[ExperimentConfig], data: &Dataset) -> GridTable {
    let rows = cfgs
        .iter()
        .map(|cfg| {
            let outcome = run_experiment(cfg, data).and_then(|run| {
                let report = evaluate(&run.model, &run.test_set, &run.stats, run.meta(cfg))?;
                Ok((report.mean_rmse, report.mean_pcc, run.report.stop_epoch))
            });
            let mut row = GridRow {
                mode: cfg.mode,
                batch: cfg.batch_size,
                smoother: cfg.smoother_mode,
                rmse_mm: f64::NAN,
                pcc: f64::NAN,
                stop_epoch: 0,
                error: None,
            };
            match outcome {
                Ok((rmse, pcc, stop)) => {
                    row.rmse_mm = rmse;
                    row.pcc = pcc;
                    row.stop_epoch = stop;
                }
                Err(e) => {
                    log::warn!("grid entry {} batch {} failed: {e}", cfg.mode, cfg.batch_size);
                    row.error = Some(e.to_string());
                }
            }
            row
        })
        .collect();
    GridTable { rows }
}
