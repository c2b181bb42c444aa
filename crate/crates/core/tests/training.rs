use std::sync::OnceLock;

use artinv_core::corpus::{generate_synthetic_corpus, load_corpus, two_corpus_synthesis, SyntheticSpec};
use artinv_core::ema::{design_windowed_sinc, LaMode};
use artinv_core::metrics::{evaluate, EvalMeta};
use artinv_core::net::{ModelConfig, SmootherMode};
use artinv_core::train::{
    run_experiment, run_experiment_grid, train, Dataset, ExperimentConfig, GridTable, Mode,
};

fn fixture() -> &'static Dataset {
    static DATA: OnceLock<Dataset> = OnceLock::new();
    DATA.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec {
            utterances_per_speaker: 12,
            duration_range: [1.0, 1.4],
            ..SyntheticSpec::default()
        };
        generate_synthetic_corpus(&spec, dir.path()).unwrap();
        let corpus = load_corpus(dir.path()).unwrap();
        Dataset::build(&[corpus], &Default::default(), LaMode::Literal).unwrap()
    })
}

fn quick(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        mode: Mode::SD,
        speaker: Some("synth_spk00".into()),
        seed,
        max_epochs: 6,
        patience: 2,
        model: ModelConfig {
            dense_units: 24,
            hidden_per_direction: 12,
            ..ModelConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

#[test]
fn identical_runs_are_bit_identical() {
    let (m1, r1) = train(&quick(3), fixture()).unwrap();
    let (m2, r2) = train(&quick(3), fixture()).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(m1, m2);
    assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    let (_, r3) = train(&quick(4), fixture()).unwrap();
    assert_ne!(r1, r3);
}

#[test]
fn report_invariants_and_frozen_smoother() {
    let run = run_experiment(&quick(1), fixture()).unwrap();
    let rep = &run.report;
    assert!(rep.stop_epoch <= rep.best_epoch + run_cfg_patience() + 1);
    let best = rep.epoch(rep.best_epoch).unwrap().val_loss;
    assert_eq!(best, rep.best_val_loss);
    assert!(rep.epochs.iter().filter(|e| e.epoch > rep.best_epoch).all(|e| e.val_loss >= best));
    let kernel = design_windowed_sinc(25.0, 100.0, 50).unwrap();
    assert_eq!(run.model.params.smoother.kernels.row(0).to_vec(), kernel.taps());
    assert!(run.model.stats.is_some());
    let (n_train, n_val, n_test) = (run.split.train.len(), run.split.validation.len(), run.split.test.len());
    assert_eq!((n_train, n_val, n_test), (8, 1, 3));
}

fn run_cfg_patience() -> usize {
    quick(0).patience
}

#[test]
fn evaluation_report_structure() {
    let run = run_experiment(&quick(2), fixture()).unwrap();
    let report = evaluate(&run.model, &run.test_set, &run.stats, run.meta(&quick(2))).unwrap();
    assert_eq!(report.channels.len(), 16);
    assert_eq!(report.utterances.len(), run.test_set.len());
    let mean_pcc = report.channels.iter().map(|c| c.pcc).sum::<f64>() / 16.0;
    let mean_rmse = report.channels.iter().map(|c| c.rmse).sum::<f64>() / 16.0;
    assert!((mean_pcc - report.mean_pcc).abs() < 1e-12);
    assert!((mean_rmse - report.mean_rmse).abs() < 1e-12);
    assert!(report.channels.iter().all(|c| (-1.0..=1.0).contains(&c.pcc) && c.rmse >= 0.0));
    assert_eq!(report.meta.mode, "SD");
    assert!(evaluate(&run.model, &[], &run.stats, EvalMeta::default()).is_err());
}

#[test]
fn batch_size_grid() {
    let cfgs: Vec<_> = [1, 8, 16, 32]
        .into_iter()
        .map(|b| ExperimentConfig {
            batch_size: b,
            max_epochs: 2,
            patience: 1,
            ..quick(0)
        })
        .collect();
    let table = run_experiment_grid(&cfgs, fixture());
    assert_eq!(table.rows.len(), 4);
    assert!(table.rows.iter().all(|r| r.error.is_none() && r.pcc.is_finite() && r.rmse_mm > 0.0));
    let csv = table.to_csv();
    assert_eq!(csv.lines().next().unwrap(), GridTable::HEADER);
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn smoother_grid_and_failures() {
    let cfgs = vec![
        ExperimentConfig { smoother_mode: SmootherMode::Fixed, max_epochs: 2, patience: 1, ..quick(0) },
        ExperimentConfig { smoother_mode: SmootherMode::Adaptive, max_epochs: 2, patience: 1, ..quick(0) },
        ExperimentConfig { speaker: Some("nobody".into()), max_epochs: 2, patience: 1, ..quick(0) },
    ];
    let table = run_experiment_grid(&cfgs, fixture());
    assert_eq!(table.rows.len(), 3);
    assert_eq!(table.rows[1].smoother, SmootherMode::Adaptive);
    assert!(table.rows[..2].iter().all(|r| r.error.is_none()));
    assert!(table.rows[2].error.is_some());
    assert!(run_experiment_grid(&[], fixture()).rows.is_empty());
}

#[test]
fn invalid_configs_are_rejected() {
    for cfg in [
        ExperimentConfig { batch_size: 0, ..quick(0) },
        ExperimentConfig { patience: 6, ..quick(0) },
        ExperimentConfig { speaker: None, ..quick(0) },
        ExperimentConfig { mode: Mode::CC, corpus: Some("synth".into()), ..quick(0) },
    ] {
        assert!(matches!(cfg.validate(), Err(artinv_core::Error::Config(_))));
    }
    let text = quick(5).to_toml();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), quick(5));
    assert!(ExperimentConfig::from_toml("batch_sz = 3").is_err());
}

/// CD within each corpus learns; a second corpus with the same map and speakers
/// but fresh utterances shows no domain gap.
#[test]
fn cross_corpus_controls() {
    let dir = tempfile::tempdir().unwrap();
    let a = SyntheticSpec { corpus: "alpha".into(), n_speakers: 2, utterances_per_speaker: 14, seed: 5, map_seed: 31, ..SyntheticSpec::default() };
    let b = SyntheticSpec { corpus: "beta".into(), seed: 6, map_seed: 32, global_offset_mm: 3.0, ..a.clone() };
    let twin = SyntheticSpec { corpus: "alpha_twin".into(), seed: 99, ..a.clone() };
    two_corpus_synthesis(&a, &b, &dir.path().join("a"), &dir.path().join("b")).unwrap();
    generate_synthetic_corpus(&twin, &dir.path().join("twin")).unwrap();
    let corpora: Vec<_> = ["a", "b", "twin"].iter().map(|d| load_corpus(&dir.path().join(d)).unwrap()).collect();
    let data = Dataset::build(&corpora, &Default::default(), LaMode::Literal).unwrap();
    let model = ModelConfig { dense_units: 128, hidden_per_direction: 64, ..ModelConfig::default() };
    let pcc = |mode: Mode, corpus: &str, test: Option<&str>| {
        let cfg = ExperimentConfig {
            mode,
            corpus: Some(corpus.into()),
            test_corpus: test.map(String::from),
            seed: 1,
            max_epochs: 25,
            model: model.clone(),
            ..ExperimentConfig::default()
        };
        let run = run_experiment(&cfg, &data).unwrap();
        evaluate(&run.model, &run.test_set, &run.stats, EvalMeta::default()).unwrap().mean_pcc
    };
    let cd_a = pcc(Mode::CD, "alpha", None);
    let cd_b = pcc(Mode::CD, "beta", None);
    let cc_twin = pcc(Mode::CC, "alpha", Some("alpha_twin"));
    let cc_b = pcc(Mode::CC, "alpha", Some("beta"));
    eprintln!("CD alpha {cd_a:.3}, CD beta {cd_b:.3}, CC alpha->twin {cc_twin:.3}, CC alpha->beta {cc_b:.3}");
    assert!(cd_a >= 0.8 && cd_b >= 0.8);
    assert!(cc_b < cd_a);
    assert!((cd_a - cc_twin).abs() < 0.05);
}
