//! The inversion network and its exact gradients.

mod grads;
mod layers;
mod model;
mod persist;

pub use grads::{compute_gradients, GradientSet};
pub(crate) use grads::accumulate_sequence;
pub use layers::{lstm_step, BiLstmLayer, DenseLayer, LstmCellParams, SmoothingConv};
pub use model::{InversionModel, ModelConfig, Params, Prediction, SmootherMode};
pub use persist::{load_model, save_model, MODEL_FORMAT_VERSION};

use ndarray::ArrayView2;

use crate::error::Result;

/// Convenience alias for [`BiLstmLayer::forward`].
pub fn bilstm_forward(layer: &BiLstmLayer, seq: ArrayView2<f64>) -> Result<ndarray::Array2<f64>> {
    layer.forward(seq)
}

/// Convenience alias for [`InversionModel::forward`].
pub fn model_forward(model: &InversionModel, seq: ArrayView2<f64>) -> Result<Prediction> {
    model.forward(seq)
}

/// Convenience alias for [`InversionModel::init`].
pub fn init_model(cfg: &ModelConfig, seed: u64, mode: SmootherMode) -> Result<InversionModel> {
    InversionModel::init(cfg, seed, mode)
}
