use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{GradientSet, InversionModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates per named tensor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub step: u64,
    moments: Vec<(String, Vec<f64>, Vec<f64>)>,
}

/// One Adam update of every tensor present in `grads`. Tensors without a
/// gradient entry (the frozen smoother) are left untouched.
pub fn optimizer_step(
    model: &mut InversionModel,
    grads: &GradientSet,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    let entries = grads.entries();
    for (name, g) in &entries {
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite gradient in {name}[{i}]")));
        }
    }
    if state.moments.is_empty() {
        state.moments = entries
            .iter()
            .map(|(n, g)| (n.clone(), vec![0.0; g.len()], vec![0.0; g.len()]))
            .collect();
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);
    let mut params = model.params.tensors_mut();
    for ((name, g), (mname, m, v)) in entries.iter().zip(state.moments.iter_mut()) {
        if name != mname || g.len() != m.len() {
            return Err(Error::shape(format!("optimizer state for {mname} does not match {name}")));
        }
        let (_, p) = params
            .iter_mut()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::shape(format!("gradient for unknown tensor {name}")))?;
        for i in 0..g.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}
