use artinv_core::ema::design_windowed_sinc;
use artinv_core::net::{
    compute_gradients, init_model, lstm_step, BiLstmLayer, LstmCellParams, ModelConfig, SmootherMode,
};
use ndarray::{s, Array1, Array2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cell(input: usize, hidden: usize, seed: u64) -> LstmCellParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cell = LstmCellParams::zeros(input, hidden);
    cell.w_hidden.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    cell.w_input.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    cell.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    cell
}

fn random_seq(t: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((t, d), |_| rng.random_range(-1.0..1.0))
}

#[test]
fn lstm_step_matches_scalar_loops() {
    let (input, hidden) = (5, 3);
    let cell = random_cell(input, hidden, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h0: Vec<f64> = (0..hidden).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c0: Vec<f64> = (0..hidden).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x: Vec<f64> = (0..input).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (h, c) = lstm_step(
        &cell,
        Array1::from(h0.clone()).view(),
        Array1::from(c0.clone()).view(),
        Array1::from(x.clone()).view(),
    )
    .unwrap();

    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let pre = |gate: usize, j: usize| {
        let row = gate * hidden + j;
        let mut z = cell.bias[row];
        for k in 0..hidden {
            z += cell.w_hidden[[row, k]] * h0[k];
        }
        for k in 0..input {
            z += cell.w_input[[row, k]] * x[k];
        }
        z
    };
    for j in 0..hidden {
        let f = sig(pre(0, j));
        let i = sig(pre(1, j));
        let g = pre(2, j).tanh();
        let o = sig(pre(3, j));
        let c_ref = f * c0[j] + i * g;
        let h_ref = o * c_ref.tanh();
        assert!((c[j] - c_ref).abs() < 1e-12);
        assert!((h[j] - h_ref).abs() < 1e-12);
    }
}

#[test]
fn single_frame_halves_agree_with_shared_weights() {
    let cell = random_cell(4, 3, 7);
    let layer = BiLstmLayer {
        forward_cell: cell.clone(),
        backward_cell: cell,
    };
    let out = layer.forward(random_seq(1, 4, 8).view()).unwrap();
    assert_eq!(out.dim(), (1, 6));
    assert_eq!(out.slice(s![.., ..3]), out.slice(s![.., 3..]));
}

#[test]
fn time_reversal_swaps_directions() {
    let cell = random_cell(4, 3, 9);
    let layer = BiLstmLayer {
        forward_cell: cell.clone(),
        backward_cell: cell,
    };
    let x = random_seq(12, 4, 10);
    let reversed = x.slice(s![..;-1, ..]).to_owned();
    let a = layer.forward(x.view()).unwrap();
    let b = layer.forward(reversed.view()).unwrap();
    for t in 0..12 {
        for j in 0..3 {
            assert!((a[[t, j]] - b[[11 - t, 3 + j]]).abs() < 1e-12);
            assert!((a[[t, 3 + j]] - b[[11 - t, j]]).abs() < 1e-12);
        }
    }
}

#[test]
fn bilstm_rejects_wrong_width() {
    let layer = BiLstmLayer::zeros(4, 3);
    assert!(layer.forward(random_seq(5, 3, 1).view()).is_err());
}

#[test]
fn full_size_parameter_count() {
    let cfg = ModelConfig::default();
    assert_eq!(cfg.parameter_count(), 2_101_666);
    let model = init_model(&cfg, 0, SmootherMode::Fixed).unwrap();
    assert_eq!(model.parameter_count(), 2_101_666);
}

fn small() -> ModelConfig {
    ModelConfig {
        dense_units: 6,
        hidden_per_direction: 4,
        ..ModelConfig::default()
    }
}

#[test]
fn seeding_is_deterministic() {
    let a = init_model(&small(), 3, SmootherMode::Adaptive).unwrap();
    let b = init_model(&small(), 3, SmootherMode::Adaptive).unwrap();
    let c = init_model(&small(), 4, SmootherMode::Adaptive).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.params, c.params);
}

#[test]
fn fixed_mode_loads_designed_kernel() {
    let model = init_model(&small(), 1, SmootherMode::Fixed).unwrap();
    let kernel = design_windowed_sinc(25.0, 100.0, 50).unwrap();
    assert!(model.is_smoother_frozen());
    assert_eq!(model.params.smoother.kernels.row(0).to_vec(), kernel.taps());
}

#[test]
fn output_shapes() {
    let model = init_model(&small(), 1, SmootherMode::Fixed).unwrap();
    let pred = model.forward(random_seq(37, 429, 2).view()).unwrap();
    assert_eq!(pred.raw.dim(), (37, 16));
    assert_eq!(pred.smoothed.dim(), (37, 16));
    assert!(model.forward(random_seq(5, 428, 2).view()).is_err());
}

#[test]
fn all_masked_sequence_has_zero_gradient() {
    let model = init_model(&small(), 1, SmootherMode::Adaptive).unwrap();
    let x = random_seq(8, 429, 3);
    let y = random_seq(8, 16, 4);
    let (loss, grads) = compute_gradients(&model, x.view(), y.view(), &[false; 8]).unwrap();
    assert_eq!(loss, 0.0);
    assert_eq!(grads.l2_norm(), 0.0);
}

#[test]
fn non_prefix_mask_is_rejected() {
    let model = init_model(&small(), 1, SmootherMode::Fixed).unwrap();
    let x = random_seq(4, 429, 3);
    let y = random_seq(4, 16, 4);
    assert!(compute_gradients(&model, x.view(), y.view(), &[true, false, true, false]).is_err());
}

#[test]
fn frozen_smoother_has_no_gradient_entry() {
    let x = random_seq(6, 429, 5);
    let y = random_seq(6, 16, 6);
    let fixed = init_model(&small(), 1, SmootherMode::Fixed).unwrap();
    let (_, g) = compute_gradients(&fixed, x.view(), y.view(), &[true; 6]).unwrap();
    assert!(!g.contains("smoother.kernels"));
    assert!(g.contains("output_dense.bias"));
    let adaptive = init_model(&small(), 1, SmootherMode::Adaptive).unwrap();
    let (_, g) = compute_gradients(&adaptive, x.view(), y.view(), &[true; 6]).unwrap();
    assert!(g.contains("smoother.kernels"));
}

#[test]
fn per_channel_kernels_need_adaptive_mode() {
    let cfg = ModelConfig {
        per_channel_kernels: true,
        ..small()
    };
    assert!(init_model(&cfg, 1, SmootherMode::Fixed).is_err());
    let model = init_model(&cfg, 1, SmootherMode::Adaptive).unwrap();
    assert_eq!(model.params.smoother.kernels.dim(), (16, 50));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn smoothing_is_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0, t in 1usize..80) {
        let model = init_model(&small(), 1, SmootherMode::Fixed).unwrap();
        let conv = &model.params.smoother;
        let x = random_seq(t, 16, seed);
        let y = random_seq(t, 16, seed + 1);
        let combo = &x * a + &y * b;
        let lhs = conv.forward(combo.view());
        let rhs = conv.forward(x.view()) * a + conv.forward(y.view()) * b;
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((l - r).abs() < 1e-10);
        }
    }
}
