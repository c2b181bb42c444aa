mod config;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use artinv_core::corpus::{generate_synthetic_corpus, load_corpus, read_matrix, write_matrix, Corpus};
use artinv_core::ema::{ChannelStats, TARGET_CHANNELS};
use artinv_core::metrics::{evaluate, predict_set, EvalMeta};
use artinv_core::net::{load_model, save_model, InversionModel, SmootherMode};
use artinv_core::train::{finalize, make_split, run_experiment, run_experiment_grid, Dataset, TrainingUtterance};
use artinv_core::Error;
use clap::{Args, Parser, Subcommand};

use config::{resolve, CliConfig};

const RESOLVED_CONFIG: &str = "resolved_config.toml";
const FAILED_MARKER: &str = "FAILED";

#[derive(Parser, Debug)]
#[command(name = "artinv", version, about = "Acoustic-to-articulatory inversion")]
struct Cli {
    /// TOML file with `[synth]` and `[experiment]` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dotted-path override, e.g. `experiment.batch_size=16`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for synthesis and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress (RUST_LOG takes precedence).
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CorpusArgs {
    /// Corpus directory or manifest. Repeatable.
    #[arg(long = "corpus", required = true)]
    corpora: Vec<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic parallel corpus into the output directory.
    Synth,
    /// Write acoustic and articulatory matrices for every utterance.
    Features {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Train a model and write it with its training report.
    Train {
        #[command(flatten)]
        corpus: CorpusArgs,
    },
    /// Score a trained model on the test partition (or every utterance).
    Eval {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        model: PathBuf,
        /// Evaluate every utterance instead of the configured test split.
        #[arg(long)]
        all: bool,
    },
    /// Write target, raw and smoothed trajectories per utterance.
    Predict {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        model: PathBuf,
        /// Restrict to these utterances. Repeatable.
        #[arg(long = "utterance")]
        utterances: Vec<String>,
    },
    /// Render SVG plots from the output of `predict`.
    ExportPlot {
        /// Directory written by `predict`.
        #[arg(long)]
        predictions: PathBuf,
        /// Plot only these utterances. Repeatable.
        #[arg(long = "utterance")]
        utterances: Vec<String>,
    },
    /// Train and score one configuration per batch size and smoother mode.
    Grid {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_delimiter = ',', default_value = "1,8,16,32")]
        batch_sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "fixed")]
        smoothers: Vec<String>,
    },
}

fn exit_code(err: &anyhow::Error) -> (u8, &'static str) {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Config(_) | Error::Selector(_) | Error::InvalidCutoff { .. } | Error::InvalidTaps(_)) => {
            (2, "config")
        }
        Some(Error::Numerical(_)) => (4, "numerical"),
        _ => (3, "data"),
    }
}

fn create_dir(path: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn load_data(args: &CorpusArgs, cfg: &CliConfig) -> anyhow::Result<Dataset> {
    let corpora = args
        .corpora
        .iter()
        .map(|p| load_corpus(p).with_context(|| format!("loading corpus {}", p.display())))
        .collect::<anyhow::Result<Vec<Corpus>>>()?;
    let data = Dataset::build(&corpora, &cfg.experiment.features, cfg.experiment.la_mode)?;
    for (id, reason) in &data.flagged {
        log::warn!("skipped {id}: {reason}");
    }
    Ok(data)
}

fn model_stats(model: &InversionModel) -> anyhow::Result<&ChannelStats> {
    model
        .stats
        .as_ref()
        .ok_or_else(|| anyhow!(Error::Persistence("model file carries no target statistics".into())))
}

fn frame_meta(id: &str, rate: f64) -> Vec<(&'static str, String)> {
    vec![("utterance", id.to_string()), ("frame_rate", rate.to_string())]
}

fn cmd_synth(cfg: &CliConfig, out: &Path) -> anyhow::Result<()> {
    let manifest = generate_synthetic_corpus(&cfg.synth, out)?;
    println!(
        "wrote {} utterances from {} speakers to {}",
        manifest.utterances.len(),
        manifest.speakers.len(),
        out.display()
    );
    Ok(())
}

fn cmd_features(cfg: &CliConfig, args: &CorpusArgs, out: &Path) -> anyhow::Result<()> {
    let data = load_data(args, cfg)?;
    let dir = out.join("features");
    create_dir(&dir)?;
    for u in &data.utterances {
        let meta = frame_meta(&u.id, u.frame_rate);
        write_matrix(&dir.join(format!("{}.acoustic.csv", u.id)), &meta, None, &u.acoustic)?;
        write_matrix(
            &dir.join(format!("{}.articulatory.csv", u.id)),
            &meta,
            Some(&TARGET_CHANNELS),
            &u.targets,
        )?;
    }
    println!("wrote features for {} utterances to {}", data.utterances.len(), dir.display());
    Ok(())
}

fn cmd_train(cfg: &CliConfig, args: &CorpusArgs, out: &Path) -> anyhow::Result<()> {
    let data = load_data(args, cfg)?;
    let run = run_experiment(&cfg.experiment, &data)?;
    save_model(&run.model, &out.join("model.bin"))?;
    write_json(&out.join("train_report.json"), &run.report)?;
    write_json(&out.join("split.json"), &run.split)?;
    println!(
        "trained {} epochs (best {}), best validation loss {:.5}, {:.1} s",
        run.report.stop_epoch,
        run.report.best_epoch,
        run.report.best_val_loss,
        run.report.wall_time.as_secs_f64()
    );
    Ok(())
}

fn scoring_set(
    cfg: &CliConfig,
    data: &Dataset,
    stats: &ChannelStats,
    all: bool,
) -> anyhow::Result<Vec<TrainingUtterance>> {
    let items: Vec<_> = if all {
        data.utterances.iter().collect()
    } else {
        let split = make_split(&data.metas(), &cfg.experiment)?;
        data.select(&split.test)?
    };
    Ok(finalize(&items, stats)?)
}

fn cmd_eval(cfg: &CliConfig, args: &CorpusArgs, model_path: &Path, all: bool, out: &Path) -> anyhow::Result<()> {
    let model = load_model(model_path)?;
    let stats = model_stats(&model)?;
    let data = load_data(args, cfg)?;
    let test = scoring_set(cfg, &data, stats, all)?;
    let e = &cfg.experiment;
    let meta = EvalMeta {
        mode: if all { "all".into() } else { e.mode.to_string() },
        speaker: e.speaker.clone(),
        corpus: e.test_corpus.clone().or_else(|| e.corpus.clone()),
    };
    let report = evaluate(&model, &test, stats, meta)?;
    write_json(&out.join("eval_report.json"), &report)?;
    let csv = out.join("eval_channels.csv");
    fs::write(&csv, report.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    println!(
        "{} utterances: mean PCC {:.4}, mean RMSE {:.4} mm",
        report.utterances.len(),
        report.mean_pcc,
        report.mean_rmse
    );
    Ok(())
}

fn cmd_predict(
    cfg: &CliConfig,
    args: &CorpusArgs,
    model_path: &Path,
    only: &[String],
    out: &Path,
) -> anyhow::Result<()> {
    let model = load_model(model_path)?;
    let stats = model_stats(&model)?;
    let data = load_data(args, cfg)?;
    let items: Vec<_> = if only.is_empty() {
        data.utterances.iter().collect()
    } else {
        data.select(only)?
    };
    let rates: Vec<f64> = items.iter().map(|u| u.frame_rate).collect();
    let set = finalize(&items, stats)?;
    let preds = predict_set(&model, &set, stats)?;
    let dir = out.join("predictions");
    create_dir(&dir)?;
    for (p, rate) in preds.iter().zip(rates) {
        for (kind, m) in [("target", &p.target), ("raw", &p.raw), ("smoothed", &p.smoothed)] {
            let mut meta = frame_meta(&p.id, rate);
            meta.push(("kind", kind.to_string()));
            write_matrix(&dir.join(format!("{}.{kind}.csv", p.id)), &meta, Some(&TARGET_CHANNELS), m)?;
        }
    }
    println!("wrote predictions for {} utterances to {}", preds.len(), dir.display());
    Ok(())
}

fn cmd_export_plot(predictions: &Path, only: &[String], out: &Path) -> anyhow::Result<()> {
    let mut ids: Vec<String> = if only.is_empty() {
        let entries = fs::read_dir(predictions).with_context(|| format!("reading {}", predictions.display()))?;
        entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(".smoothed.csv").map(String::from))
            .collect()
    } else {
        only.to_vec()
    };
    ids.sort();
    if ids.is_empty() {
        return Err(anyhow!(Error::Load {
            id: predictions.display().to_string(),
            reason: "no prediction files found".into(),
        }));
    }
    let dir = out.join("plots");
    create_dir(&dir)?;
    for id in &ids {
        let load = |kind: &str| read_matrix(&predictions.join(format!("{id}.{kind}.csv")));
        let (target, raw, smoothed) = (load("target")?, load("raw")?, load("smoothed")?);
        let rate: f64 = smoothed
            .meta
            .get("frame_rate")
            .and_then(|r| r.parse().ok())
            .unwrap_or(100.0);
        let names: Vec<String> = smoothed
            .header
            .clone()
            .unwrap_or_else(|| TARGET_CHANNELS.iter().map(|s| s.to_string()).collect());
        let columns: Vec<[Vec<f64>; 3]> = (0..names.len())
            .map(|c| {
                [&target, &raw, &smoothed].map(|m| m.data.column(c).to_vec())
            })
            .collect();
        fn series(cols: &[Vec<f64>; 3]) -> Vec<plot::Series<'_>> {
            vec![
                plot::Series { label: "target", color: "#222222", dashed: false, values: &cols[0] },
                plot::Series { label: "raw", color: "#d95f02", dashed: true, values: &cols[1] },
                plot::Series { label: "smoothed", color: "#1b9e77", dashed: false, values: &cols[2] },
            ]
        }
        let mut panels = Vec::new();
        for (name, cols) in names.iter().zip(&columns) {
            let svg = plot::single(&format!("{id} {name}"), rate, &series(cols));
            let path = dir.join(format!("{id}_{name}.svg"));
            fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
            panels.push((name.clone(), series(cols)));
        }
        let path = dir.join(format!("{id}_all.svg"));
        fs::write(&path, plot::stacked(&panels, rate)).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("wrote plots for {} utterances to {}", ids.len(), dir.display());
    Ok(())
}

fn cmd_grid(
    cfg: &CliConfig,
    args: &CorpusArgs,
    batch_sizes: &[usize],
    smoothers: &[String],
    out: &Path,
) -> anyhow::Result<()> {
    let modes = smoothers
        .iter()
        .map(|s| match s.as_str() {
            "fixed" => Ok(SmootherMode::Fixed),
            "adaptive" => Ok(SmootherMode::Adaptive),
            other => Err(anyhow!(Error::Config(format!("unknown smoother mode `{other}`")))),
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let data = load_data(args, cfg)?;
    let mut cfgs = Vec::new();
    for &mode in &modes {
        for &batch_size in batch_sizes {
            cfgs.push(artinv_core::train::ExperimentConfig {
                batch_size,
                smoother_mode: mode,
                ..cfg.experiment.clone()
            });
        }
    }
    let table = run_experiment_grid(&cfgs, &data);
    let csv = out.join("grid.csv");
    fs::write(&csv, table.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    write_json(&out.join("grid.json"), &table)?;
    print!("{}", table.to_csv());
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = resolve(cli.config.as_deref(), &cli.overrides, cli.seed)
        .map_err(|e| anyhow!(Error::Config(format!("{e:#}"))))?;
    let out = &cli.out;
    create_dir(out)?;
    let _ = fs::remove_file(out.join(FAILED_MARKER));
    let snapshot = toml::to_string_pretty(&cfg).context("serializing resolved configuration")?;
    fs::write(out.join(RESOLVED_CONFIG), snapshot).context("writing resolved configuration")?;
    match &cli.command {
        Command::Synth => cmd_synth(&cfg, out),
        Command::Features { corpus } => cmd_features(&cfg, corpus, out),
        Command::Train { corpus } => cmd_train(&cfg, corpus, out),
        Command::Eval { corpus, model, all } => cmd_eval(&cfg, corpus, model, *all, out),
        Command::Predict { corpus, model, utterances } => cmd_predict(&cfg, corpus, model, utterances, out),
        Command::ExportPlot { predictions, utterances } => cmd_export_plot(predictions, utterances, out),
        Command::Grid {
            corpus,
            batch_sizes,
            smoothers,
        } => cmd_grid(&cfg, corpus, batch_sizes, smoothers, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, kind) = exit_code(&err);
            let message = format!("{err:#}");
            eprintln!("{}", serde_json::json!({ "error": { "kind": kind, "message": message } }));
            if cli.out.is_dir() {
                let _ = fs::write(cli.out.join(FAILED_MARKER), format!("{kind}: {message}\n"));
            }
            ExitCode::from(code)
        }
    }
}
