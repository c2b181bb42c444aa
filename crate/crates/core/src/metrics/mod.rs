//! Pearson correlation, RMSE and per-channel evaluation reports.

use serde::{Deserialize, Serialize};

use crate::ema::{ChannelStats, TARGET_CHANNELS};
use crate::error::{Error, Result};
use crate::net::InversionModel;
use crate::train::TrainingUtterance;

/// Pearson correlation coefficient `cov(a, y) / (σ_a σ_y)`, clamped to [-1, 1].
pub fn pearson_cc(a: &[f64], y: &[f64]) -> Result<f64> {
    if a.len() != y.len() {
        return Err(Error::shape(format!(
            "correlation of sequences with lengths {} and {}",
            a.len(),
            y.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::shape("correlation needs at least two samples"));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut cov, mut var_a, mut var_y) = (0.0, 0.0, 0.0);
    for (x, z) in a.iter().zip(y) {
        let (da, dy) = (x - mean_a, z - mean_y);
        cov += da * dy;
        var_a += da * da;
        var_y += dy * dy;
    }
    if var_a == 0.0 || var_y == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((cov / (var_a * var_y).sqrt()).clamp(-1.0, 1.0))
}

/// Root mean squared error `√(Σ (a_i − y_i)² / N)`.
pub fn rmse(a: &[f64], y: &[f64]) -> Result<f64> {
    if a.len() != y.len() {
        return Err(Error::shape(format!(
            "rmse of sequences with lengths {} and {}",
            a.len(),
            y.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::shape("rmse of empty sequences"));
    }
    let sse: f64 = a.iter().zip(y).map(|(x, z)| (x - z) * (x - z)).sum();
    Ok((sse / a.len() as f64).sqrt())
}

/// Order in which per-utterance, per-channel values are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Average each channel over utterances, then average the channels.
    #[default]
    ChannelMajor,
    /// Average each utterance over channels, then average the utterances.
    UtteranceMajor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScore {
    pub channel: String,
    pub pcc: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceScore {
    pub id: String,
    /// Per channel; `None` where the correlation is undefined (constant channel).
    pub pcc: Vec<Option<f64>>,
    pub rmse: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalMeta {
    pub mode: String,
    pub speaker: Option<String>,
    pub corpus: Option<String>,
}

/// Per-channel and aggregate scores over a test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub meta: EvalMeta,
    pub channels: Vec<ChannelScore>,
    pub utterances: Vec<UtteranceScore>,
    pub mean_pcc: f64,
    pub mean_rmse: f64,
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// One utterance worth of predictions and targets, both `T × C` in the same units.
pub struct Scored<'a> {
    pub id: &'a str,
    pub target: ndarray::ArrayView2<'a, f64>,
    pub prediction: ndarray::ArrayView2<'a, f64>,
}

impl EvalReport {
    /// Score every utterance channel by channel and aggregate.
    pub fn from_pairs(
        channel_names: &[&str],
        pairs: &[Scored<'_>],
        meta: EvalMeta,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyEvaluation);
        }
        let n_ch = channel_names.len();
        let mut utterances = Vec::with_capacity(pairs.len());
        for p in pairs {
            if p.target.dim() != p.prediction.dim() || p.target.ncols() != n_ch {
                return Err(Error::shape(format!(
                    "utterance {}: target {:?} vs prediction {:?}",
                    p.id,
                    p.target.dim(),
                    p.prediction.dim()
                )));
            }
            let mut pcc = Vec::with_capacity(n_ch);
            let mut err = Vec::with_capacity(n_ch);
            for c in 0..n_ch {
                let a = p.target.column(c).to_vec();
                let y = p.prediction.column(c).to_vec();
                pcc.push(match pearson_cc(&a, &y) {
                    Ok(v) => Some(v),
                    Err(Error::UndefinedCorrelation) => None,
                    Err(Error::Shape(_)) if a.len() < 2 => None,
                    Err(e) => return Err(e),
                });
                err.push(rmse(&a, &y)?);
            }
            utterances.push(UtteranceScore {
                id: p.id.to_string(),
                pcc,
                rmse: err,
            });
        }
        let channels = channel_names
            .iter()
            .enumerate()
            .map(|(c, name)| ChannelScore {
                channel: name.to_string(),
                pcc: mean(utterances.iter().filter_map(|u| u.pcc[c])),
                rmse: mean(utterances.iter().map(|u| u.rmse[c])),
            })
            .collect::<Vec<_>>();
        let mean_pcc = mean(channels.iter().map(|c| c.pcc).filter(|v| v.is_finite()));
        let mean_rmse = mean(channels.iter().map(|c| c.rmse));
        Ok(Self {
            meta,
            channels,
            utterances,
            mean_pcc,
            mean_rmse,
        })
    }

    /// Aggregate PCC and RMSE under the requested averaging order.
    pub fn aggregate(&self, order: Aggregation) -> (f64, f64) {
        match order {
            Aggregation::ChannelMajor => (self.mean_pcc, self.mean_rmse),
            Aggregation::UtteranceMajor => {
                let pcc = mean(
                    self.utterances
                        .iter()
                        .map(|u| mean(u.pcc.iter().flatten().copied()))
                        .filter(|v| v.is_finite()),
                );
                let rmse = mean(self.utterances.iter().map(|u| mean(u.rmse.iter().copied())));
                (pcc, rmse)
            }
        }
    }

    /// `channel,pcc,rmse_mm` rows followed by a `mean` footer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("channel,pcc,rmse_mm\n");
        for c in &self.channels {
            out.push_str(&format!("{},{},{}\n", c.channel, c.pcc, c.rmse));
        }
        out.push_str(&format!("mean,{},{}\n", self.mean_pcc, self.mean_rmse));
        out
    }
}


/// De-normalized predictions of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct UtterancePrediction {
    pub id: String,
    /// Target in mm / tract-variable units.
    pub target: ndarray::Array2<f64>,
    pub raw: ndarray::Array2<f64>,
    pub smoothed: ndarray::Array2<f64>,
}

/// Run the model over `test` and map targets and outputs back to physical units.
pub fn predict_set(
    model: &InversionModel,
    test: &[TrainingUtterance],
    stats: &ChannelStats,
) -> Result<Vec<UtterancePrediction>> {
    test.iter()
        .map(|u| {
            let p = model.forward(u.acoustic.view())?;
            Ok(UtterancePrediction {
                id: u.id.clone(),
                target: stats.invert(u.targets.view())?,
                raw: stats.invert(p.raw.view())?,
                smoothed: stats.invert(p.smoothed.view())?,
            })
        })
        .collect()
}

/// Score the smoothed model output on `test`. RMSE is in mm.
pub fn evaluate(
    model: &InversionModel,
    test: &[TrainingUtterance],
    stats: &ChannelStats,
    meta: EvalMeta,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let preds = predict_set(model, test, stats)?;
    let pairs: Vec<Scored<'_>> = preds
        .iter()
        .map(|p| Scored {
            id: &p.id,
            target: p.target.view(),
            prediction: p.smoothed.view(),
        })
        .collect();
    EvalReport::from_pairs(&TARGET_CHANNELS, &pairs, meta)
}
