//! Acceptance suite. Runs every criterion in sequence and prints one
//! PASS/FAIL line each; exits non-zero when any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test -p artinv-core --test acceptance -- 2 3 4`.

use std::path::Path;
use std::time::{Duration, Instant};

use artinv_core::corpus::{generate_synthetic_corpus, load_corpus, two_corpus_synthesis, SyntheticSpec};
use artinv_core::dsp::mean_sq_second_difference;
use artinv_core::ema::{
    constriction_location, design_windowed_sinc, lip_aperture, lip_protrusion, LaMode, N_TARGETS,
    TARGET_CHANNELS,
};
use artinv_core::frontend::ACOUSTIC_DIM;
use artinv_core::metrics::{evaluate, pearson_cc, predict_set, rmse, EvalMeta, EvalReport, Scored};
use artinv_core::net::{compute_gradients, save_model, InversionModel, ModelConfig, SmootherMode};
use artinv_core::train::{run_experiment, Dataset, ExperimentConfig, Mode, TrainedExperiment};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sd_fixture(dir: &Path) -> Dataset {
    generate_synthetic_corpus(&SyntheticSpec::default(), dir).expect("synthesis");
    let corpus = load_corpus(dir).expect("load");
    Dataset::build(&[corpus], &Default::default(), LaMode::Literal).expect("dataset")
}

fn sd_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        mode: Mode::SD,
        speaker: Some(SyntheticSpec::default().speaker_id(0)),
        seed,
        ..ExperimentConfig::default()
    }
}

/// Narrower network for criteria that need many training runs.
fn reduced_model() -> ModelConfig {
    ModelConfig {
        dense_units: 128,
        hidden_per_direction: 64,
        ..ModelConfig::default()
    }
}

fn test_pcc(run: &TrainedExperiment) -> f64 {
    evaluate(&run.model, &run.test_set, &run.stats, EvalMeta::default())
        .expect("evaluate")
        .mean_pcc
}

fn train_pcc(run: &TrainedExperiment) -> f64 {
    evaluate(&run.model, &run.train_set, &run.stats, EvalMeta::default())
        .expect("evaluate")
        .mean_pcc
}

// 1
fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let cfg = ModelConfig {
        dense_units: 8,
        hidden_per_direction: 8,
        ..ModelConfig::default()
    };
    let mut model = InversionModel::init(&cfg, 17, SmootherMode::Adaptive).map_err(|e| e.to_string())?;
    let t_len = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let x = Array2::from_shape_fn((t_len, ACOUSTIC_DIM), |_| rng.random_range(-1.0..1.0));
    let y = Array2::from_shape_fn((t_len, N_TARGETS), |_| rng.random_range(-1.0..1.0));
    let mut mask = vec![true; t_len];
    mask[t_len - 1] = false;
    let loss = |m: &InversionModel| compute_gradients(m, x.view(), y.view(), &mask).unwrap().0;
    let (_, grads) = compute_gradients(&model, x.view(), y.view(), &mask).map_err(|e| e.to_string())?;
    let analytic: Vec<(String, Vec<f64>)> = grads.entries().into_iter().map(|(n, t)| (n, t.to_vec())).collect();

    let eps = 1e-5;
    let mut worst = (0.0f64, String::new());
    let mut checked = 0usize;
    for (name, g) in &analytic {
        for (idx, &a) in g.iter().enumerate() {
            let set = |model: &mut InversionModel, v: Option<f64>| -> f64 {
                let mut ts = model.params.tensors_mut();
                let t = &mut ts.iter_mut().find(|(n, _)| n == name).unwrap().1;
                let old = t[idx];
                if let Some(v) = v {
                    t[idx] = v;
                }
                old
            };
            let orig = set(&mut model, None);
            set(&mut model, Some(orig + eps));
            let plus = loss(&model);
            set(&mut model, Some(orig - eps));
            let minus = loss(&model);
            set(&mut model, Some(orig));
            let numeric = (plus - minus) / (2.0 * eps);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            if err > worst.0 {
                worst = (err, format!("{name}[{idx}]"));
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        worst.0 < 1e-4 && elapsed < Duration::from_secs(60),
        format!(
            "{checked} parameters, worst relative error {:.2e} at {}, {:.1} s",
            worst.0,
            worst.1,
            elapsed.as_secs_f64()
        ),
    )
}

// 2
fn filter_design() -> Outcome {
    let kernel = design_windowed_sinc(25.0, 100.0, 50).map_err(|e| e.to_string())?;
    let h = kernel.taps();
    // Independent DTFT: H(ω) = Σ h[n] e^{-iωn}.
    let dtft = |omega: f64| {
        let (re, im) = h.iter().enumerate().fold((0.0, 0.0), |(re, im), (n, v)| {
            (re + v * (omega * n as f64).cos(), im - v * (omega * n as f64).sin())
        });
        re.hypot(im)
    };
    let dc = dtft(0.0);
    let nyquist_db = 20.0 * dtft(std::f64::consts::PI).max(1e-300).log10();
    let asym = (0..h.len()).map(|i| (h[i] - h[h.len() - 1 - i]).abs()).fold(0.0, f64::max);
    check(
        h.len() == 50 && (dc - 1.0).abs() < 1e-6 && asym <= 1e-12 && nyquist_db <= -40.0,
        format!("DC gain {dc:.12}, asymmetry {asym:.1e}, Nyquist {nyquist_db:.1} dB"),
    )
}

// 3
fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_pcc = 0.0f64;
    let mut worst_rmse = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(2..200);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let nf = n as f64;
        let (ma, my) = (a.iter().sum::<f64>() / nf, y.iter().sum::<f64>() / nf);
        let num: f64 = (0..n).map(|i| (a[i] - ma) * (y[i] - my)).sum();
        let da: f64 = (0..n).map(|i| (a[i] - ma).powi(2)).sum::<f64>().sqrt();
        let dy: f64 = (0..n).map(|i| (y[i] - my).powi(2)).sum::<f64>().sqrt();
        let brute_pcc = num / (da * dy);
        let brute_rmse = ((0..n).map(|i| (a[i] - y[i]).powi(2)).sum::<f64>() / nf).sqrt();
        worst_pcc = worst_pcc.max((pearson_cc(&a, &y).unwrap() - brute_pcc).abs());
        worst_rmse = worst_rmse.max((rmse(&a, &y).unwrap() - brute_rmse).abs());
    }
    let a: Vec<f64> = (0..100).map(|_| rng.random_range(-5.0..5.0)).collect();
    let neg: Vec<f64> = a.iter().map(|v| -v).collect();
    let exact = pearson_cc(&a, &a).unwrap() == 1.0
        && pearson_cc(&a, &neg).unwrap() == -1.0
        && rmse(&a, &a).unwrap() == 0.0;
    check(
        worst_pcc < 1e-12 && worst_rmse < 1e-12 && exact,
        format!("max |ΔPCC| {worst_pcc:.1e}, max |ΔRMSE| {worst_rmse:.1e}, identities exact: {exact}"),
    )
}

// 4
fn tract_variables() -> Outcome {
    let cl = constriction_location(3.0, 4.0).map_err(|e| e.to_string())?;
    let lp = lip_protrusion(1.0, 0.0);
    let la = lip_aperture((1.0, 0.0), (0.0, 1.0), LaMode::Literal).map_err(|e| e.to_string())?;
    check(
        (cl - 0.6).abs() < 1e-12 && (lp - 0.5).abs() < 1e-12 && (la - 2f64.sqrt()).abs() < 1e-12,
        format!("CL {cl}, LP {lp}, LA {la}"),
    )
}

// 5, 8 and 10 share the full-size SD run.
struct SdRun {
    data: Dataset,
    run: TrainedExperiment,
    elapsed: Duration,
}

fn full_sd_run() -> SdRun {
    let dir = tempfile::tempdir().expect("tempdir");
    let start = Instant::now();
    let data = sd_fixture(dir.path());
    let run = run_experiment(&sd_config(0), &data).expect("training");
    SdRun {
        data,
        run,
        elapsed: start.elapsed(),
    }
}

fn learnability(sd: &SdRun) -> Outcome {
    let start = Instant::now();
    let control_cfg = ExperimentConfig {
        shuffle_labels: true,
        ..sd_config(0)
    };
    let control = run_experiment(&control_cfg, &sd.data).map_err(|e| e.to_string())?;
    let control_pcc = test_pcc(&control);
    let total = sd.elapsed + start.elapsed();
    let (tr, te) = (train_pcc(&sd.run), test_pcc(&sd.run));
    check(
        tr >= 0.9 && te >= 0.8 && control_pcc < 0.2 && total < Duration::from_secs(600),
        format!(
            "train PCC {tr:.3}, test PCC {te:.3}, stopped at epoch {} (best {}), shuffled-label control test PCC {control_pcc:.3}, {:.0} s",
            sd.run.report.stop_epoch,
            sd.run.report.best_epoch,
            total.as_secs_f64()
        ),
    )
}

// 6
fn fixed_vs_adaptive() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let data = sd_fixture(dir.path());
    let seeds = [1u64, 2, 3];
    let mut val10 = [0.0f64; 2];
    let mut final_pcc = [0.0f64; 2];
    for (k, mode) in [SmootherMode::Fixed, SmootherMode::Adaptive].into_iter().enumerate() {
        for &seed in &seeds {
            let cfg = ExperimentConfig {
                smoother_mode: mode,
                model: reduced_model(),
                ..sd_config(seed)
            };
            let run = run_experiment(&cfg, &data).map_err(|e| e.to_string())?;
            let at10 = run
                .report
                .epoch(10)
                .ok_or_else(|| format!("{mode} seed {seed} stopped before epoch 10"))?;
            val10[k] += at10.val_pcc / seeds.len() as f64;
            final_pcc[k] += test_pcc(&run) / seeds.len() as f64;
        }
    }
    check(
        val10[0] >= val10[1] && final_pcc[0] >= final_pcc[1] - 0.02,
        format!(
            "epoch-10 validation PCC fixed {:.3} vs adaptive {:.3}; final test PCC fixed {:.3} vs adaptive {:.3}",
            val10[0], val10[1], final_pcc[0], final_pcc[1]
        ),
    )
}

// 7
fn mode_ordering() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let a = SyntheticSpec {
        corpus: "alpha".into(),
        n_speakers: 3,
        utterances_per_speaker: 16,
        seed: 11,
        map_seed: 21,
        ..SyntheticSpec::default()
    };
    let b = SyntheticSpec {
        corpus: "beta".into(),
        seed: 12,
        map_seed: 22,
        global_offset_mm: 3.0,
        ..a.clone()
    };
    let (da, db) = (dir.path().join("alpha"), dir.path().join("beta"));
    two_corpus_synthesis(&a, &b, &da, &db).map_err(|e| e.to_string())?;
    let corpora = [load_corpus(&da).unwrap(), load_corpus(&db).unwrap()];
    let data = Dataset::build(&corpora, &Default::default(), LaMode::Literal).map_err(|e| e.to_string())?;
    let speaker = a.speaker_id(0);
    let mut ok = true;
    let mut lines = Vec::new();
    for seed in [1u64, 2, 3] {
        let mut pcc = Vec::new();
        for (mode, spk, corpus, test) in [
            (Mode::SD, Some(&speaker), None, None),
            (Mode::SI, Some(&speaker), Some("alpha"), None),
            (Mode::CD, None, Some("alpha"), None),
            (Mode::CC, None, Some("alpha"), Some("beta")),
        ] {
            let cfg = ExperimentConfig {
                mode,
                speaker: spk.cloned(),
                corpus: corpus.map(String::from),
                test_corpus: test.map(String::from),
                seed,
                max_epochs: 30,
                model: reduced_model(),
                ..ExperimentConfig::default()
            };
            let run = run_experiment(&cfg, &data).map_err(|e| e.to_string())?;
            pcc.push(test_pcc(&run));
        }
        ok &= pcc[0] >= pcc[1] && pcc[2] >= pcc[3];
        lines.push(format!(
            "seed {seed}: SD {:.3} SI {:.3} CD {:.3} CC {:.3}",
            pcc[0], pcc[1], pcc[2], pcc[3]
        ));
    }
    check(ok, lines.join("; "))
}

// 8
fn smoothing_effect(sd: &SdRun) -> Outcome {
    let preds = predict_set(&sd.run.model, &sd.run.test_set, &sd.run.stats).map_err(|e| e.to_string())?;
    let mut rough = [0.0f64; 2];
    for p in &preds {
        for c in 0..N_TARGETS {
            rough[0] += mean_sq_second_difference(&p.raw.column(c).to_vec());
            rough[1] += mean_sq_second_difference(&p.smoothed.column(c).to_vec());
        }
    }
    let score = |smoothed: bool| {
        let pairs: Vec<Scored<'_>> = preds
            .iter()
            .map(|p| Scored {
                id: &p.id,
                target: p.target.view(),
                prediction: if smoothed { p.smoothed.view() } else { p.raw.view() },
            })
            .collect();
        EvalReport::from_pairs(&TARGET_CHANNELS, &pairs, EvalMeta::default()).map(|r| r.mean_pcc)
    };
    let (raw_pcc, smooth_pcc) = (score(false).map_err(|e| e.to_string())?, score(true).map_err(|e| e.to_string())?);
    let reduction = 1.0 - rough[1] / rough[0];
    check(
        reduction >= 0.3 && smooth_pcc - raw_pcc >= -0.02,
        format!(
            "roughness reduced by {:.1}%, PCC raw {raw_pcc:.3} -> smoothed {smooth_pcc:.3}",
            100.0 * reduction
        ),
    )
}

// 9
fn pipeline_bytes(root: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let data = sd_fixture(&root.join("corpus"));
    let cfg = ExperimentConfig {
        max_epochs: 6,
        patience: 3,
        model: reduced_model(),
        ..sd_config(7)
    };
    let run = run_experiment(&cfg, &data).map_err(|e| e.to_string())?;
    let model_path = root.join("model.bin");
    save_model(&run.model, &model_path).map_err(|e| e.to_string())?;
    let eval = evaluate(&run.model, &run.test_set, &run.stats, run.meta(&cfg)).map_err(|e| e.to_string())?;
    let preds = predict_set(&run.model, &run.test_set, &run.stats).map_err(|e| e.to_string())?;
    let mut pred_text = String::new();
    for p in &preds {
        for (a, b) in p.raw.iter().zip(p.smoothed.iter()) {
            pred_text.push_str(&format!("{a:?},{b:?}\n"));
        }
    }
    Ok(vec![
        ("model file".into(), std::fs::read(&model_path).map_err(|e| e.to_string())?),
        ("train report".into(), serde_json::to_vec(&run.report).unwrap()),
        ("eval report".into(), serde_json::to_vec(&eval).unwrap()),
        ("predictions".into(), pred_text.into_bytes()),
    ])
}

fn determinism() -> Outcome {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = pipeline_bytes(d1.path())?;
    let second = pipeline_bytes(d2.path())?;
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a.1 != b.1)
        .map(|(a, _)| a.0.as_str())
        .collect();
    check(
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} artifacts bit-identical", first.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

// 10
fn shape_contracts(sd: &SdRun) -> Outcome {
    let mut bad = Vec::new();
    for u in &sd.data.utterances {
        let pred = sd.run.model.forward(u.acoustic.view()).map_err(|e| e.to_string())?;
        let t = u.acoustic.nrows();
        if u.acoustic.ncols() != ACOUSTIC_DIM
            || u.targets.dim() != (t, N_TARGETS)
            || pred.raw.dim() != (t, N_TARGETS)
            || pred.smoothed.dim() != (t, N_TARGETS)
        {
            bad.push(u.id.clone());
        }
    }
    check(
        bad.is_empty(),
        format!("{} utterances checked, {} violations {:?}", sd.data.utterances.len(), bad.len(), bad),
    )
}

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wants = |n: usize| selected.is_empty() || selected.contains(&n);
    let names = [
        "gradient correctness",
        "filter design",
        "metric oracles",
        "tract variables",
        "end-to-end learnability",
        "fixed-vs-adaptive trend",
        "mode ordering",
        "smoothing effect",
        "determinism",
        "shape contracts",
    ];
    let sd = if wants(5) || wants(8) || wants(10) {
        Some(full_sd_run())
    } else {
        None
    };
    let mut failures = 0;
    for (i, name) in names.iter().enumerate() {
        let n = i + 1;
        if !wants(n) {
            continue;
        }
        let start = Instant::now();
        let outcome = match n {
            1 => gradient_correctness(),
            2 => filter_design(),
            3 => metric_oracles(),
            4 => tract_variables(),
            5 => learnability(sd.as_ref().unwrap()),
            6 => fixed_vs_adaptive(),
            7 => mode_ordering(),
            8 => smoothing_effect(sd.as_ref().unwrap()),
            9 => determinism(),
            _ => shape_contracts(sd.as_ref().unwrap()),
        };
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failures += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
