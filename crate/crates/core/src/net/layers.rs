//! Layer primitives with explicit forward caches and backward passes.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::dsp::{left_pad, reflect_index};
use crate::error::{Error, Result};

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Fully connected layer `y = W x + b`, `W` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weights: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.nrows()
    }

    /// Row-wise application to a `T × in` matrix.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.weights.t());
        y += &self.bias;
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub(crate) fn backward(
        &self,
        x: ArrayView2<f64>,
        dy: ArrayView2<f64>,
        grad: &mut DenseLayer,
    ) -> Array2<f64> {
        grad.weights += &dy.t().dot(&x);
        grad.bias += &dy.sum_axis(Axis(0));
        dy.dot(&self.weights)
    }
}

/// One LSTM direction. Gate blocks are stacked in the order forget, input,
/// candidate, output; the recurrent and input halves of `W·[h; x]` are kept
/// as separate matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    /// `4h × h`
    pub w_hidden: Array2<f64>,
    /// `4h × in`
    pub w_input: Array2<f64>,
    /// `4h`
    pub bias: Array1<f64>,
}

impl LstmCellParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_hidden: Array2::zeros((4 * hidden, hidden)),
            w_input: Array2::zeros((4 * hidden, input)),
            bias: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hidden.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.w_input.ncols()
    }
}

/// Single LSTM time step.
///
/// `f = σ(W_f[h;x] + b_f)`, `i = σ(W_i[h;x] + b_i)`, `c̃ = tanh(W_c[h;x] + b_c)`,
/// `c = f⊙c_prev + i⊙c̃`, `o = σ(W_o[h;x] + b_o)`, `h = o⊙tanh(c)`.
pub fn lstm_step(
    params: &LstmCellParams,
    h_prev: ArrayView1<f64>,
    c_prev: ArrayView1<f64>,
    x: ArrayView1<f64>,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let h = params.hidden();
    if h_prev.len() != h || c_prev.len() != h || x.len() != params.input_dim() {
        return Err(Error::shape(format!(
            "lstm_step expects h={h}, c={h}, x={}, got h={}, c={}, x={}",
            params.input_dim(),
            h_prev.len(),
            c_prev.len(),
            x.len()
        )));
    }
    let z = params.w_hidden.dot(&h_prev) + params.w_input.dot(&x) + &params.bias;
    let mut h_out = Array1::zeros(h);
    let mut c_out = Array1::zeros(h);
    for j in 0..h {
        let f = sigmoid(z[j]);
        let i = sigmoid(z[h + j]);
        let g = z[2 * h + j].tanh();
        let o = sigmoid(z[3 * h + j]);
        let c = f * c_prev[j] + i * g;
        c_out[j] = c;
        h_out[j] = o * c.tanh();
    }
    Ok((h_out, c_out))
}

/// Activations of one left-to-right scan, kept for backpropagation.
pub(crate) struct DirectionCache {
    /// Post-activation gates `T × 4h` (f, i, c̃, o).
    gates: Array2<f64>,
    cell: Array2<f64>,
    tanh_cell: Array2<f64>,
    pub(crate) hidden: Array2<f64>,
}

/// Left-to-right scan from zero state over `x` (`T × in`).
pub(crate) fn scan_forward(p: &LstmCellParams, x: ArrayView2<f64>) -> DirectionCache {
    let t_len = x.nrows();
    let h = p.hidden();
    let mut gates = x.dot(&p.w_input.t());
    gates += &p.bias;
    let mut cell = Array2::zeros((t_len, h));
    let mut tanh_cell = Array2::zeros((t_len, h));
    let mut hidden = Array2::<f64>::zeros((t_len, h));
    let mut rec = Array1::zeros(4 * h);
    for t in 0..t_len {
        if t > 0 {
            ndarray::linalg::general_mat_vec_mul(
                1.0,
                &p.w_hidden,
                &hidden.row(t - 1),
                0.0,
                &mut rec,
            );
        }
        let mut z = gates.row_mut(t);
        if t > 0 {
            z += &rec;
        }
        for j in 0..h {
            let f = sigmoid(z[j]);
            let i = sigmoid(z[h + j]);
            let g = z[2 * h + j].tanh();
            let o = sigmoid(z[3 * h + j]);
            let c_prev = if t > 0 { cell[[t - 1, j]] } else { 0.0 };
            let c = f * c_prev + i * g;
            let tc = c.tanh();
            z[j] = f;
            z[h + j] = i;
            z[2 * h + j] = g;
            z[3 * h + j] = o;
            cell[[t, j]] = c;
            tanh_cell[[t, j]] = tc;
            hidden[[t, j]] = o * tc;
        }
    }
    DirectionCache {
        gates,
        cell,
        tanh_cell,
        hidden,
    }
}

/// Backpropagation through time for one scan. `d_hidden` is `dL/dh_t` from
/// the layer above; returns `dL/dx`.
pub(crate) fn scan_backward(
    p: &LstmCellParams,
    x: ArrayView2<f64>,
    cache: &DirectionCache,
    d_hidden: ArrayView2<f64>,
    grad: &mut LstmCellParams,
) -> Array2<f64> {
    let t_len = x.nrows();
    let h = p.hidden();
    let w_hidden_t = p.w_hidden.t().as_standard_layout().into_owned();
    let mut dz = Array2::<f64>::zeros((t_len, 4 * h));
    let mut dh_next = Array1::<f64>::zeros(h);
    let mut dc_next = Array1::<f64>::zeros(h);
    for t in (0..t_len).rev() {
        let g = cache.gates.row(t);
        {
            let mut dzr = dz.row_mut(t);
            for j in 0..h {
                let (f, i, gc, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let tc = cache.tanh_cell[[t, j]];
                let dh = d_hidden[[t, j]] + dh_next[j];
                let d_o = dh * tc;
                let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
                let c_prev = if t > 0 { cache.cell[[t - 1, j]] } else { 0.0 };
                dzr[j] = dc * c_prev * f * (1.0 - f);
                dzr[h + j] = dc * gc * i * (1.0 - i);
                dzr[2 * h + j] = dc * i * (1.0 - gc * gc);
                dzr[3 * h + j] = d_o * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
        }
        if t > 0 {
            ndarray::linalg::general_mat_vec_mul(1.0, &w_hidden_t, &dz.row(t), 0.0, &mut dh_next);
        }
    }
    grad.w_input += &dz.t().dot(&x);
    if t_len > 1 {
        grad.w_hidden += &dz
            .slice(s![1.., ..])
            .t()
            .dot(&cache.hidden.slice(s![..t_len - 1, ..]));
    }
    grad.bias += &dz.sum_axis(Axis(0));
    dz.dot(&p.w_input)
}

/// Forward and backward LSTM scans concatenated per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmLayer {
    pub forward_cell: LstmCellParams,
    pub backward_cell: LstmCellParams,
}

pub(crate) struct BiLstmCache {
    fwd: DirectionCache,
    bwd: DirectionCache,
    reversed_input: Array2<f64>,
}

fn reverse_rows(x: ArrayView2<f64>) -> Array2<f64> {
    x.slice(s![..;-1, ..]).to_owned()
}

impl BiLstmLayer {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            forward_cell: LstmCellParams::zeros(input, hidden),
            backward_cell: LstmCellParams::zeros(input, hidden),
        }
    }

    pub fn hidden_per_direction(&self) -> usize {
        self.forward_cell.hidden()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden_per_direction()
    }

    pub(crate) fn forward_cached(&self, x: ArrayView2<f64>) -> (Array2<f64>, BiLstmCache) {
        let h = self.hidden_per_direction();
        let fwd = scan_forward(&self.forward_cell, x);
        let reversed_input = reverse_rows(x);
        let bwd = scan_forward(&self.backward_cell, reversed_input.view());
        let mut out = Array2::zeros((x.nrows(), 2 * h));
        out.slice_mut(s![.., ..h]).assign(&fwd.hidden);
        out.slice_mut(s![.., h..]).assign(&bwd.hidden.slice(s![..;-1, ..]));
        (
            out,
            BiLstmCache {
                fwd,
                bwd,
                reversed_input,
            },
        )
    }

    /// Row `t` is `[→h_t ; ←h_t]`, both scans starting from zero state.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.forward_cell.input_dim() {
            return Err(Error::shape(format!(
                "BiLSTM expects {} input columns, got {}",
                self.forward_cell.input_dim(),
                x.ncols()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::shape("BiLSTM input has no frames"));
        }
        Ok(self.forward_cached(x).0)
    }

    pub(crate) fn backward(
        &self,
        x: ArrayView2<f64>,
        cache: &BiLstmCache,
        dy: ArrayView2<f64>,
        grad: &mut BiLstmLayer,
    ) -> Array2<f64> {
        let h = self.hidden_per_direction();
        let mut dx = scan_backward(
            &self.forward_cell,
            x,
            &cache.fwd,
            dy.slice(s![.., ..h]),
            &mut grad.forward_cell,
        );
        let d_rev = reverse_rows(dy.slice(s![.., h..]));
        let dx_rev = scan_backward(
            &self.backward_cell,
            cache.reversed_input.view(),
            &cache.bwd,
            d_rev.view(),
            &mut grad.backward_cell,
        );
        dx += &dx_rev.slice(s![..;-1, ..]);
        dx
    }
}

/// Depthwise stride-1 convolution with reflect padding. `kernels` holds one
/// row shared by every channel, or one row per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingConv {
    pub kernels: Array2<f64>,
    pub frozen: bool,
}

impl SmoothingConv {
    pub fn taps(&self) -> usize {
        self.kernels.ncols()
    }

    fn kernel_for(&self, channel: usize) -> ArrayView1<'_, f64> {
        if self.kernels.nrows() == 1 {
            self.kernels.row(0)
        } else {
            self.kernels.row(channel)
        }
    }

    /// `y[t, c] = Σ_k w_c[k] · x[reflect(t + k - taps/2), c]`
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let (t_len, channels) = x.dim();
        let pad = left_pad(self.taps()) as isize;
        let mut y = Array2::zeros((t_len, channels));
        for c in 0..channels {
            let w = self.kernel_for(c);
            for t in 0..t_len {
                let mut acc = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    acc += wk * x[[reflect_index(t as isize + k as isize - pad, t_len), c]];
                }
                y[[t, c]] = acc;
            }
        }
        y
    }

    pub(crate) fn backward(
        &self,
        x: ArrayView2<f64>,
        dy: ArrayView2<f64>,
        grad: Option<&mut Array2<f64>>,
    ) -> Array2<f64> {
        let (t_len, channels) = x.dim();
        let pad = left_pad(self.taps()) as isize;
        let shared = self.kernels.nrows() == 1;
        let mut dx = Array2::zeros((t_len, channels));
        let mut grad = grad;
        for c in 0..channels {
            let w = self.kernel_for(c);
            let row = if shared { 0 } else { c };
            for t in 0..t_len {
                let g = dy[[t, c]];
                if g == 0.0 {
                    continue;
                }
                for (k, wk) in w.iter().enumerate() {
                    let src = reflect_index(t as isize + k as isize - pad, t_len);
                    dx[[src, c]] += wk * g;
                    if let Some(gk) = grad.as_deref_mut() {
                        gk[[row, k]] += g * x[[src, c]];
                    }
                }
            }
        }
        dx
    }
}
