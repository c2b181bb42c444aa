use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{BiLstmCache, BiLstmLayer, DenseLayer, LstmCellParams, SmoothingConv};
use crate::ema::{design_windowed_sinc, ChannelStats, N_TARGETS};
use crate::error::{Error, Result};
use crate::frontend::ACOUSTIC_DIM;

/// How the smoothing convolution is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmootherMode {
    /// Designed windowed-sinc taps, frozen for the whole run.
    #[default]
    Fixed,
    /// Random taps, trained with the rest of the network.
    Adaptive,
}

impl std::fmt::Display for SmootherMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SmootherMode::Fixed => "fixed",
            SmootherMode::Adaptive => "adaptive",
        })
    }
}

/// Architecture constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    pub dense_units: usize,
    pub hidden_per_direction: usize,
    pub lstm_layers: usize,
    pub output_dim: usize,
    pub smoother_taps: usize,
    /// Frame rate the designed kernel is normalized to.
    pub frame_rate: f64,
    pub cutoff_hz: f64,
    /// One kernel per output channel instead of a shared one (adaptive mode only).
    pub per_channel_kernels: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            input_dim: ACOUSTIC_DIM,
            dense_units: 400,
            hidden_per_direction: 200,
            lstm_layers: 2,
            output_dim: N_TARGETS,
            smoother_taps: 50,
            frame_rate: 100.0,
            cutoff_hz: 25.0,
            per_channel_kernels: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("input_dim", self.input_dim),
            ("dense_units", self.dense_units),
            ("hidden_per_direction", self.hidden_per_direction),
            ("lstm_layers", self.lstm_layers),
            ("output_dim", self.output_dim),
            ("smoother_taps", self.smoother_taps),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config(format!("model.{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Number of scalar parameters, trainable or not.
    pub fn parameter_count(&self) -> usize {
        let h = self.hidden_per_direction;
        let dense_in = self.input_dim * self.dense_units + self.dense_units;
        let mut lstm = 0;
        let mut input = self.dense_units;
        for _ in 0..self.lstm_layers {
            lstm += 2 * 4 * (h * (h + input) + h);
            input = 2 * h;
        }
        let dense_out = input * self.output_dim + self.output_dim;
        let kernels = if self.per_channel_kernels { self.output_dim } else { 1 };
        dense_in + lstm + dense_out + kernels * self.smoother_taps
    }
}

/// Learnable tensors of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub input_dense: DenseLayer,
    pub bilstm: Vec<BiLstmLayer>,
    pub output_dense: DenseLayer,
    pub smoother: SmoothingConv,
}

impl Params {
    pub fn zeros(cfg: &ModelConfig, frozen: bool) -> Self {
        let mut bilstm = Vec::with_capacity(cfg.lstm_layers);
        let mut input = cfg.dense_units;
        for _ in 0..cfg.lstm_layers {
            bilstm.push(BiLstmLayer::zeros(input, cfg.hidden_per_direction));
            input = 2 * cfg.hidden_per_direction;
        }
        let kernels = if cfg.per_channel_kernels { cfg.output_dim } else { 1 };
        Self {
            input_dense: DenseLayer::zeros(cfg.input_dim, cfg.dense_units),
            bilstm,
            output_dense: DenseLayer::zeros(input, cfg.output_dim),
            smoother: SmoothingConv {
                kernels: Array2::zeros((kernels, cfg.smoother_taps)),
                frozen,
            },
        }
    }

    /// Every tensor in canonical order with a stable name.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = Vec::new();
        out.push(("input_dense.weights".into(), slice(&self.input_dense.weights)));
        out.push(("input_dense.bias".into(), slice1(&self.input_dense.bias)));
        for (l, layer) in self.bilstm.iter().enumerate() {
            for (dir, cell) in [("fwd", &layer.forward_cell), ("bwd", &layer.backward_cell)] {
                let p = format!("bilstm{}.{dir}", l + 1);
                out.push((format!("{p}.w_hidden"), slice(&cell.w_hidden)));
                out.push((format!("{p}.w_input"), slice(&cell.w_input)));
                out.push((format!("{p}.bias"), slice1(&cell.bias)));
            }
        }
        out.push(("output_dense.weights".into(), slice(&self.output_dense.weights)));
        out.push(("output_dense.bias".into(), slice1(&self.output_dense.bias)));
        out.push(("smoother.kernels".into(), slice(&self.smoother.kernels)));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = Vec::new();
        out.push(("input_dense.weights".into(), slice_mut(&mut self.input_dense.weights)));
        out.push(("input_dense.bias".into(), slice1_mut(&mut self.input_dense.bias)));
        for (l, layer) in self.bilstm.iter_mut().enumerate() {
            for (dir, cell) in [
                ("fwd", &mut layer.forward_cell),
                ("bwd", &mut layer.backward_cell),
            ] {
                let p = format!("bilstm{}.{dir}", l + 1);
                out.push((format!("{p}.w_hidden"), slice_mut(&mut cell.w_hidden)));
                out.push((format!("{p}.w_input"), slice_mut(&mut cell.w_input)));
                out.push((format!("{p}.bias"), slice1_mut(&mut cell.bias)));
            }
        }
        out.push(("output_dense.weights".into(), slice_mut(&mut self.output_dense.weights)));
        out.push(("output_dense.bias".into(), slice1_mut(&mut self.output_dense.bias)));
        out.push(("smoother.kernels".into(), slice_mut(&mut self.smoother.kernels)));
        out
    }

    pub fn shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        out.push(("input_dense.weights".to_string(), self.input_dense.weights.shape().to_vec()));
        out.push(("input_dense.bias".to_string(), self.input_dense.bias.shape().to_vec()));
        for (l, layer) in self.bilstm.iter().enumerate() {
            for (dir, cell) in [("fwd", &layer.forward_cell), ("bwd", &layer.backward_cell)] {
                let p = format!("bilstm{}.{dir}", l + 1);
                out.push((format!("{p}.w_hidden"), cell.w_hidden.shape().to_vec()));
                out.push((format!("{p}.w_input"), cell.w_input.shape().to_vec()));
                out.push((format!("{p}.bias"), cell.bias.shape().to_vec()));
            }
        }
        out.push(("output_dense.weights".to_string(), self.output_dense.weights.shape().to_vec()));
        out.push(("output_dense.bias".to_string(), self.output_dense.bias.shape().to_vec()));
        out.push(("smoother.kernels".to_string(), self.smoother.kernels.shape().to_vec()));
        out
    }
}

fn slice(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("parameter tensors are contiguous")
}

fn slice1(a: &Array1<f64>) -> &[f64] {
    a.as_slice().expect("parameter tensors are contiguous")
}

fn slice_mut(a: &mut Array2<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("parameter tensors are contiguous")
}

fn slice1_mut(a: &mut Array1<f64>) -> &mut [f64] {
    a.as_slice_mut().expect("parameter tensors are contiguous")
}

/// Dense → ReLU → stacked BiLSTM → dense → smoothing convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionModel {
    pub config: ModelConfig,
    pub params: Params,
    pub smoother_mode: SmootherMode,
    pub seed: u64,
    /// Target normalization the model was trained against.
    pub stats: Option<ChannelStats>,
}

/// Outputs of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub raw: Array2<f64>,
    pub smoothed: Array2<f64>,
}

pub(crate) struct ForwardCache {
    input_pre: Array2<f64>,
    lstm_inputs: Vec<Array2<f64>>,
    lstm_caches: Vec<BiLstmCache>,
    last_hidden: Array2<f64>,
    pub(crate) raw: Array2<f64>,
    pub(crate) smoothed: Array2<f64>,
}

fn uniform_fill(rng: &mut ChaCha8Rng, data: &mut [f64], fan_in: usize) {
    let bound = (1.0 / fan_in as f64).sqrt();
    for v in data {
        *v = rng.random_range(-bound..bound);
    }
}

fn init_cell(rng: &mut ChaCha8Rng, cell: &mut LstmCellParams) {
    let fan_in = cell.hidden() + cell.input_dim();
    uniform_fill(rng, cell.w_hidden.as_slice_mut().unwrap(), fan_in);
    uniform_fill(rng, cell.w_input.as_slice_mut().unwrap(), fan_in);
    uniform_fill(rng, cell.bias.as_slice_mut().unwrap(), fan_in);
}

impl InversionModel {
    /// Seeded initialization. Dense and LSTM weights and biases are drawn from
    /// `U(-√(1/fan_in), √(1/fan_in))`. Fixed mode loads the designed sinc
    /// kernel and freezes it; adaptive mode draws the taps the same way.
    pub fn init(cfg: &ModelConfig, seed: u64, mode: SmootherMode) -> Result<Self> {
        cfg.validate()?;
        if mode == SmootherMode::Fixed && cfg.per_channel_kernels {
            return Err(Error::Config(
                "per-channel smoothing kernels are only available in adaptive mode".into(),
            ));
        }
        let mut params = Params::zeros(cfg, mode == SmootherMode::Fixed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fan = params.input_dense.input_dim();
        uniform_fill(&mut rng, params.input_dense.weights.as_slice_mut().unwrap(), fan);
        uniform_fill(&mut rng, params.input_dense.bias.as_slice_mut().unwrap(), fan);
        for layer in &mut params.bilstm {
            init_cell(&mut rng, &mut layer.forward_cell);
            init_cell(&mut rng, &mut layer.backward_cell);
        }
        let fan = params.output_dense.input_dim();
        uniform_fill(&mut rng, params.output_dense.weights.as_slice_mut().unwrap(), fan);
        uniform_fill(&mut rng, params.output_dense.bias.as_slice_mut().unwrap(), fan);
        match mode {
            SmootherMode::Fixed => {
                let kernel = design_windowed_sinc(cfg.cutoff_hz, cfg.frame_rate, cfg.smoother_taps)?;
                params.smoother.kernels.row_mut(0).assign(&Array1::from(kernel.taps().to_vec()));
            }
            SmootherMode::Adaptive => {
                let taps = cfg.smoother_taps;
                uniform_fill(&mut rng, params.smoother.kernels.as_slice_mut().unwrap(), taps);
            }
        }
        Ok(Self {
            config: cfg.clone(),
            params,
            smoother_mode: mode,
            seed,
            stats: None,
        })
    }

    pub fn is_smoother_frozen(&self) -> bool {
        self.params.smoother.frozen
    }

    pub fn parameter_count(&self) -> usize {
        self.params.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.config.input_dim {
            return Err(Error::shape(format!(
                "model expects {} input columns, got {}",
                self.config.input_dim,
                x.ncols()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::shape("input sequence has no frames"));
        }
        Ok(())
    }

    pub(crate) fn forward_cached(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(&x)?;
        let input_pre = self.params.input_dense.forward(x);
        let mut act = input_pre.mapv(|v| v.max(0.0));
        let mut lstm_inputs = Vec::with_capacity(self.params.bilstm.len());
        let mut lstm_caches = Vec::with_capacity(self.params.bilstm.len());
        for layer in &self.params.bilstm {
            let (out, cache) = layer.forward_cached(act.view());
            lstm_inputs.push(act);
            lstm_caches.push(cache);
            act = out;
        }
        let raw = self.params.output_dense.forward(act.view());
        let smoothed = self.params.smoother.forward(raw.view());
        Ok(ForwardCache {
            input_pre,
            lstm_inputs,
            lstm_caches,
            last_hidden: act,
            raw,
            smoothed,
        })
    }

    /// Raw and smoothed `T × 16` predictions for a `T × 429` input.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Prediction> {
        let cache = self.forward_cached(x)?;
        Ok(Prediction {
            raw: cache.raw,
            smoothed: cache.smoothed,
        })
    }

    /// Backpropagate `d_smoothed` through the whole network, accumulating into `grad`.
    pub(crate) fn backward(
        &self,
        x: ArrayView2<f64>,
        cache: &ForwardCache,
        d_smoothed: ArrayView2<f64>,
        grad: &mut Params,
    ) {
        let p = &self.params;
        let kernel_grad = if p.smoother.frozen {
            None
        } else {
            Some(&mut grad.smoother.kernels)
        };
        let d_raw = p.smoother.backward(cache.raw.view(), d_smoothed, kernel_grad);
        let mut d_act = p
            .output_dense
            .backward(cache.last_hidden.view(), d_raw.view(), &mut grad.output_dense);
        for (l, layer) in p.bilstm.iter().enumerate().rev() {
            d_act = layer.backward(
                cache.lstm_inputs[l].view(),
                &cache.lstm_caches[l],
                d_act.view(),
                &mut grad.bilstm[l],
            );
        }
        ndarray::Zip::from(&mut d_act)
            .and(&cache.input_pre)
            .for_each(|d, &pre| {
                if pre <= 0.0 {
                    *d = 0.0;
                }
            });
        p.input_dense.backward(x, d_act.view(), &mut grad.input_dense);
    }
}
