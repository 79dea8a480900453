use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use axum::http::HeaderValue;
use clap::{Args, Parser, Subcommand};
use ideation_core::chat::{archive_checksum, ModelDetector, QuestionBank, RiskPolicy, SessionManager};
use ideation_core::store;
use ideation_core::text::{
    clean_text, read_corpus_file, write_corpus, CleanRules, LabeledText, Vocabulary, CLASS_NAMES,
};
use ideation_core::train::synth::synthetic_corpus;
use ideation_core::train::{run_experiment_with_progress, ExperimentConfig};
use ideation_core::Evaluation;

use crate::server::{self, TOKEN_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "ideation",
    version,
    about = "Suicidal-ideation text classifier and chat screening service"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean a labelled CSV corpus and optionally fit a vocabulary on it.
    Preprocess(PreprocessArgs),
    /// Train a model and write the archive and per-epoch history.
    Train(TrainArgs),
    /// Score a labelled CSV with a saved model and write the metric reports.
    Evaluate(EvaluateArgs),
    /// Print the suicide-class probability and label of one text.
    Predict(PredictArgs),
    /// Run the chat screening HTTP service.
    Serve(ServeArgs),
    /// Write the synthetic desk-scale corpus.
    SynthData(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Cleaned corpus, same `text,class` columns.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the fitted vocabulary (`index<TAB>word`).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000, requires = "vocab")]
    pub max_words: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// JSON experiment config; omitted fields keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub history: PathBuf,
    /// Also write the test-split reports here.
    #[arg(long)]
    pub report_dir: Option<PathBuf>,
    /// Overrides `train.epochs`.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Overrides `train.batch_size`.
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Overrides `train.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `split.shuffle_seed`.
    #[arg(long)]
    pub split_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub report_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub text: String,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub bank: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// JSON risk-policy overrides.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Directory for the per-session event logs; sessions found there are replayed.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Origin allowed to call the API from a browser.
    #[arg(long)]
    pub cors_origin: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn read_docs(path: &Path) -> Result<Vec<LabeledText>> {
    read_corpus_file(path).with_context(|| format!("reading {}", path.display()))
}

pub fn experiment_config(args: &TrainArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => {
            let json = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&json).with_context(|| format!("parsing {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = args.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = args.seed {
        cfg.train.seed = v;
    }
    if let Some(v) = args.split_seed {
        cfg.split.shuffle_seed = v;
    }
    cfg.model.validate()?;
    cfg.train.validate()?;
    cfg.split.validate()?;
    Ok(cfg)
}

pub fn preprocess(args: &PreprocessArgs, out: &mut dyn Write) -> Result<()> {
    let docs = read_docs(&args.data)?;
    let rules = CleanRules::default();
    let cleaned: Vec<LabeledText> = docs
        .iter()
        .map(|d| LabeledText {
            text: clean_text(&d.text, &rules),
            label: d.label,
        })
        .collect();
    write_corpus(create(&args.out)?, &cleaned)?;
    writeln!(
        out,
        "cleaned {} documents -> {}",
        cleaned.len(),
        args.out.display()
    )?;
    if let Some(path) = &args.vocab {
        let texts: Vec<&str> = cleaned.iter().map(|d| d.text.as_str()).collect();
        let vocab = Vocabulary::fit(&texts, args.max_words)?;
        let mut w = create(path)?;
        vocab.write_tsv(&mut w)?;
        w.flush()?;
        writeln!(out, "vocabulary of {} words -> {}", vocab.len(), path.display())?;
    }
    Ok(())
}

pub fn train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = experiment_config(args)?;
    let docs = read_docs(&args.data)?;
    let outcome = run_experiment_with_progress(&docs, &cfg, &mut |r| {
        eprintln!(
            "epoch {:>3}  loss {:.4}  acc {:.4}  val_loss {:.4}  val_acc {:.4}",
            r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy
        );
    })?;
    store::save(&outcome.classifier, Some(outcome.train_accuracy), &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    outcome.history.export(&args.history)?;
    let overall = &outcome.test_evaluation.overall;
    writeln!(
        out,
        "trained {} epochs (best {}); train accuracy {:.5}; test accuracy {:.5} on {} documents",
        outcome.history.stopped_epoch,
        outcome.history.best_epoch,
        outcome.train_accuracy,
        overall.accuracy,
        overall.n
    )?;
    writeln!(out, "model -> {}", args.out.display())?;
    writeln!(out, "history -> {}", args.history.display())?;
    if let Some(dir) = &args.report_dir {
        outcome
            .test_evaluation
            .report(Some(outcome.train_accuracy))
            .write_to(dir)?;
        writeln!(out, "test reports -> {}", dir.display())?;
    }
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let loaded = store::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let docs = read_docs(&args.data)?;
    let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
    let (_, predicted) = loaded.classifier.predict_texts(&texts)?;
    let truth: Vec<usize> = docs.iter().map(|d| d.label).collect();
    let report = Evaluation::from_labels(&truth, &predicted)?.report(loaded.train_accuracy);
    report.write_to(&args.report_dir)?;
    out.write_all(report.text.as_bytes())?;
    writeln!(out, "\nreports -> {}", args.report_dir.display())?;
    Ok(())
}

pub fn predict(args: &PredictArgs, out: &mut dyn Write) -> Result<()> {
    let loaded = store::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
    let (scores, labels) = loaded.classifier.predict_texts(&[args.text.as_str()])?;
    writeln!(out, "suicide_probability={:.6}", scores[0])?;
    writeln!(out, "label={}", CLASS_NAMES[labels[0]])?;
    Ok(())
}

pub fn synth_data(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    if args.n == 0 {
        bail!("--n must be positive");
    }
    let docs = synthetic_corpus(args.n, args.seed);
    let mut w = create(&args.out)?;
    write_corpus(&mut w, &docs)?;
    w.flush()?;
    writeln!(out, "wrote {} documents -> {}", docs.len(), args.out.display())?;
    Ok(())
}

/// Builds the session manager `serve` would run, without binding a socket.
pub fn build_manager(args: &ServeArgs) -> Result<SessionManager> {
    let bank = QuestionBank::load(&args.bank)?;
    let policy = match &args.policy {
        Some(p) => RiskPolicy::from_json(
            &std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?,
        None => RiskPolicy::default(),
    };
    let bytes = std::fs::read(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let loaded = store::decode(&bytes).with_context(|| format!("loading {}", args.model.display()))?;
    let rules = loaded.classifier.rules().clone();
    let detector = ModelDetector::new(loaded.classifier, archive_checksum(&bytes));
    let mut manager = SessionManager::new(bank, Some(Arc::new(detector)))?
        .with_policy(policy)?
        .with_clean_rules(rules);
    if let Some(dir) = &args.data_dir {
        manager = manager.with_event_log(dir)?;
    }
    Ok(manager)
}

pub fn serve(args: &ServeArgs, out: &mut dyn Write) -> Result<()> {
    let token = std::env::var(TOKEN_ENV).unwrap_or_default();
    if token.trim().is_empty() {
        bail!("set {TOKEN_ENV} to the bearer token clients must present");
    }
    let cors = args
        .cors_origin
        .as_deref()
        .map(HeaderValue::from_str)
        .transpose()
        .context("invalid --cors-origin")?;
    let manager = Arc::new(build_manager(args)?);
    let mut app = server::router(manager.clone(), token.trim());
    if let Some(origin) = cors {
        app = server::with_cors(app, origin);
    }

    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.addr)
            .await
            .with_context(|| format!("binding {}", args.addr))?;
        writeln!(
            out,
            "listening on http://{} ({} sessions restored, model {})",
            listener.local_addr()?,
            manager.session_count(),
            manager.model_id().unwrap_or_default()
        )?;
        out.flush()?;
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Preprocess(a) => preprocess(&a, out),
        Command::Train(a) => train(&a, out),
        Command::Evaluate(a) => evaluate(&a, out),
        Command::Predict(a) => predict(&a, out),
        Command::Serve(a) => serve(&a, out),
        Command::SynthData(a) => synth_data(&a, out),
    }
}
