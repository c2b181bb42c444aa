use ndarray::{s, Array2, ArrayView2};

use super::model::{InversionModel, Params};
use crate::error::{Error, Result};

/// Gradients for every trainable tensor. A frozen smoother has no entry.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    params: Params,
    smoother_trainable: bool,
}

impl GradientSet {
    pub fn zeros_for(model: &InversionModel) -> Self {
        Self {
            params: Params::zeros(&model.config, model.is_smoother_frozen()),
            smoother_trainable: !model.is_smoother_frozen(),
        }
    }

    pub fn entries(&self) -> Vec<(String, &[f64])> {
        let mut all = self.params.tensors();
        if !self.smoother_trainable {
            all.retain(|(name, _)| !name.starts_with("smoother."));
        }
        all
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.entries()
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn is_finite(&self) -> bool {
        self.entries()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries()
            .iter()
            .flat_map(|(_, t)| t.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    pub(crate) fn scale(&mut self, k: f64) {
        for (_, t) in self.params.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= k);
        }
    }
}

/// Length of the valid prefix described by `mask`.
pub(crate) fn valid_prefix(mask: &[bool]) -> Result<usize> {
    let len = mask.iter().take_while(|&&m| m).count();
    if mask[len..].iter().any(|&m| m) {
        return Err(Error::shape("mask must mark a contiguous prefix of valid frames"));
    }
    Ok(len)
}

/// Forward and backward on one unpadded sequence. Adds `scale · d(SSE)` into
/// `grad` and returns the sum of squared errors of the smoothed output.
pub(crate) fn accumulate_sequence(
    model: &InversionModel,
    x: ArrayView2<f64>,
    target: ArrayView2<f64>,
    scale: f64,
    grad: &mut GradientSet,
) -> Result<f64> {
    if target.nrows() != x.nrows() || target.ncols() != model.config.output_dim {
        return Err(Error::shape(format!(
            "target is {}×{}, expected {}×{}",
            target.nrows(),
            target.ncols(),
            x.nrows(),
            model.config.output_dim
        )));
    }
    let cache = model.forward_cached(x)?;
    let diff: Array2<f64> = &cache.smoothed - &target;
    let sse = diff.iter().map(|d| d * d).sum::<f64>();
    let d_smoothed = diff.mapv(|d| 2.0 * scale * d);
    model.backward(x, &cache, d_smoothed.view(), grad.params_mut());
    Ok(sse)
}

/// Exact gradients of the masked mean squared error of the smoothed output.
///
/// `mask` marks the valid prefix of `seq`; padded frames are not fed to the
/// network and contribute nothing. Returns the loss with the gradients.
pub fn compute_gradients(
    model: &InversionModel,
    seq: ArrayView2<f64>,
    target: ArrayView2<f64>,
    mask: &[bool],
) -> Result<(f64, GradientSet)> {
    if mask.len() != seq.nrows() || target.nrows() != seq.nrows() {
        return Err(Error::shape(format!(
            "sequence has {} frames, target {}, mask {}",
            seq.nrows(),
            target.nrows(),
            mask.len()
        )));
    }
    let mut grad = GradientSet::zeros_for(model);
    let len = valid_prefix(mask)?;
    if len == 0 {
        return Ok((0.0, grad));
    }
    let count = (len * model.config.output_dim) as f64;
    let sse = accumulate_sequence(
        model,
        seq.slice(s![..len, ..]),
        target.slice(s![..len, ..]),
        1.0 / count,
        &mut grad,
    )?;
    Ok((sse / count, grad))
}
