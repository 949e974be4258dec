//! The `hgcnn` command line: `generate`, `train`, `eval` and `distances`.
//!
//! Exit codes: 0 success, 2 usage error, 1 runtime failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::{read_samples, Label, LandmarkSample, N_LANDMARKS};
use crate::metrics::{MetricsReport, ScoreSet, Threshold};
use crate::model::{
    load_checkpoint_file, predict, save_checkpoint_file, train, write_log_csv, Ablation, ArchitectureConfig,
    Preprocessor, TrainConfig,
};
use crate::protocol::{Protocol, SplitManifest};
use crate::synthdata::{generate, write_dataset, GeneratorConfig, SAMPLES_FILE};
use crate::template::MOUTH;

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOG_FILE: &str = "train_log.csv";
pub const SPLIT_FILE: &str = "split.json";
pub const RUN_CONFIG_FILE: &str = "run_config.json";
pub const REPORT_FILE: &str = "report.json";
pub const SCORES_FILE: &str = "scores.csv";
pub const DEV_SCORES_FILE: &str = "dev_scores.csv";

#[derive(Debug, Parser)]
#[command(name = "hgcnn", version, about = "Hypergraph CNN for RGB-D face anti-spoofing on landmark data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (samples.jsonl + manifest.json).
    Generate(GenerateArgs),
    /// Train on a subject-disjoint split and write a checkpoint and log.
    Train(TrainArgs),
    /// Score a split or another dataset and report metrics.
    Eval(EvalArgs),
    /// Export per-layer 68x68 landmark feature distances.
    Distances(DistancesArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub subjects: u64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples_per_class: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory or JSON-lines file.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSON run config; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub protocol: Option<Protocol>,
    #[arg(long, value_enum)]
    pub ablation: Option<Ablation>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "HGCNN_THREADS", default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory written by `train`.
    #[arg(long)]
    pub run: PathBuf,
    /// Dataset the run was trained on.
    #[arg(long)]
    pub data: PathBuf,
    /// Score every sample of this other dataset, keeping the threshold from
    /// the training dataset's dev split.
    #[arg(long)]
    pub cross: Option<PathBuf>,
    /// FDR operating points for TDR.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.10,0.20")]
    pub tdr_at: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "HGCNN_THREADS", default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct DistancesArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Sample id; defaults to the first genuine sample.
    #[arg(long)]
    pub sample: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Everything needed to reproduce a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub architecture: ArchitectureConfig,
    pub training: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Subjects,
            architecture: ArchitectureConfig::default(),
            training: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub cross: bool,
    pub dev_samples: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Distances(a) => cmd_distances(a),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn require_exists(path: &Path, what: &str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} {} does not exist", path.display())))
    }
}

fn samples_path(data: &Path) -> PathBuf {
    if data.is_dir() {
        data.join(SAMPLES_FILE)
    } else {
        data.to_path_buf()
    }
}

/// Reads a dataset directory or JSON-lines file.
pub fn load_samples(data: &Path) -> Result<Vec<LandmarkSample>> {
    let path = samples_path(data);
    let ingested = read_samples(BufReader::new(File::open(&path)?))?;
    if ingested.rejected > 0 {
        eprintln!("warning: {} malformed lines skipped in {}", ingested.rejected, path.display());
    }
    if ingested.samples.is_empty() {
        return Err(Error::InvalidPoints(format!("no usable samples in {}", path.display())));
    }
    Ok(ingested.samples)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn write_scores(path: &Path, scores: &ScoreSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    scores.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> CliResult<()> {
    let cfg = GeneratorConfig {
        n_subjects: a.subjects as usize,
        samples_per_subject_per_class: a.samples_per_class as usize,
        seed: a.seed,
        ..GeneratorConfig::default()
    };
    let data = generate(&cfg)?;
    write_dataset(&data, &a.out)?;
    let m = &data.manifest;
    println!(
        "wrote {} samples from {} subjects (seed {}) to {}",
        data.samples.len(),
        m.subjects.len(),
        m.seed,
        a.out.display()
    );
    for (class, n) in &m.counts {
        println!("  {class}: {n}");
    }
    Ok(())
}

/// Config file (if any) overlaid with command-line flags.
pub fn resolve_run_config(a: &TrainArgs) -> Result<RunConfig> {
    let mut cfg: RunConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = a.protocol {
        cfg.protocol = p;
    }
    if let Some(ab) = a.ablation {
        let preprocess = cfg.architecture.preprocess;
        cfg.architecture = ArchitectureConfig {
            preprocess,
            ..ArchitectureConfig::ablation(ab)
        };
    }
    if let Some(e) = a.epochs {
        cfg.training.epochs = e;
        cfg.training.lr_decay_epoch = Some(e / 2);
    }
    if let Some(b) = a.batch_size {
        cfg.training.batch_size = b;
    }
    if let Some(lr) = a.lr {
        cfg.training.learning_rate = lr;
    }
    if let Some(s) = a.seed {
        cfg.training.seed = s;
    }
    cfg.architecture.validate()?;
    cfg.training.validate()?;
    Ok(cfg)
}

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    require_exists(&a.data, "data path")?;
    if let Some(c) = &a.config {
        require_exists(c, "config file")?;
    }
    let cfg = resolve_run_config(&a)?;
    std::fs::create_dir_all(&a.out)?;

    let samples = load_samples(&a.data)?;
    let manifest = SplitManifest::new(cfg.protocol, &samples)?;
    let splits = manifest.apply(&samples)?;
    let pre = Preprocessor::new(cfg.architecture.preprocess)?;
    let train_set = pre.prepare_all(&splits.train, &cfg.architecture)?;
    let dev_set = pre.prepare_all(&splits.dev, &cfg.architecture)?;
    let quiet = a.quiet;
    let outcome = train(&cfg.architecture, &train_set, &dev_set, &cfg.training, |e| {
        if !quiet {
            eprintln!(
                "epoch {:3}  loss {:.4}  acc {:.3}  dev acc {:.3}  dev acer {:.3}",
                e.epoch, e.train_loss, e.train_acc, e.dev_acc, e.dev_acer
            );
        }
    })?;

    save_checkpoint_file(&outcome.model, &a.out.join(CHECKPOINT_FILE))?;
    write_log_csv(&outcome.log, BufWriter::new(File::create(a.out.join(LOG_FILE))?))?;
    write_json(&a.out.join(SPLIT_FILE), &manifest)?;
    write_json(&a.out.join(RUN_CONFIG_FILE), &cfg)?;
    println!(
        "trained {} epochs (kept epoch {}), {} train / {} dev samples; checkpoint in {}",
        outcome.log.len(),
        outcome.best_epoch,
        train_set.len(),
        dev_set.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CliResult<()> {
    require_exists(&a.run, "run directory")?;
    require_exists(&a.data, "data path")?;
    if let Some(c) = &a.cross {
        require_exists(c, "cross-test data path")?;
    }
    if a.tdr_at.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(CliError::Usage("--tdr-at values must lie in [0, 1]".into()));
    }
    let model = load_checkpoint_file(&a.run.join(CHECKPOINT_FILE))?;
    let manifest: SplitManifest = read_json(&a.run.join(SPLIT_FILE))?;
    let arch = model.config.clone();
    let pre = Preprocessor::new(arch.preprocess)?;

    let samples = load_samples(&a.data)?;
    let splits = manifest.apply(&samples)?;
    let dev = predict(&model, &pre.prepare_all(&splits.dev, &arch)?, a.threads)?;
    let threshold = Threshold::from_dev(&dev)?;
    let test_samples = match &a.cross {
        Some(other) => load_samples(other)?,
        None => splits.test,
    };
    let test = predict(&model, &pre.prepare_all(&test_samples, &arch)?, a.threads)?;
    let metrics = MetricsReport::compute(&test, threshold, &a.tdr_at)?;

    std::fs::create_dir_all(&a.out)?;
    write_scores(&a.out.join(SCORES_FILE), &test)?;
    write_scores(&a.out.join(DEV_SCORES_FILE), &dev)?;
    let report = EvalReport {
        protocol: manifest.protocol,
        cross: a.cross.is_some(),
        dev_samples: dev.len(),
        metrics,
    };
    write_json(&a.out.join(REPORT_FILE), &report)?;
    let m = &report.metrics;
    println!(
        "{} test samples: ACER {:.4}  HTER {:.4}  EER {:.4}  AUC {:.4}  (threshold {:.4} from dev EER)",
        m.n_samples, m.apcer.acer, m.hter, m.eer, m.auc, m.threshold.value
    );
    for (fdr, tdr) in &m.tdr_at_fdr {
        println!("  TDR @ FDR {fdr}: {tdr:.4}");
    }
    Ok(())
}

/// Pairwise Euclidean distances between the rows of `f`.
pub fn pairwise_distances(f: &Array2<f64>) -> Array2<f64> {
    let n = f.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = f
                .row(i)
                .iter()
                .zip(f.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LayerDistanceSummary {
    pub layer: usize,
    pub file: String,
    pub mean_distance: f64,
    pub mean_mouth_distance: f64,
    /// Mean mouth distance relative to the mean over all landmark pairs.
    pub mouth_ratio: f64,
}

fn mean_off_diagonal(d: &Array2<f64>, idx: &[usize]) -> f64 {
    let mut sum = 0.0;
    let mut n = 0;
    for &i in idx {
        for &j in idx {
            if i != j {
                sum += d[[i, j]];
                n += 1;
            }
        }
    }
    sum / n as f64
}

/// Per-layer distance matrices over the 68 original landmarks of one sample.
pub fn landmark_distances(
    model: &mut crate::model::Hgcnn,
    sample: &LandmarkSample,
) -> Result<Vec<(Array2<f64>, LayerDistanceSummary)>> {
    let pre = Preprocessor::new(model.config.preprocess)?;
    let prepared = pre.prepare(sample, &model.config)?;
    let layers = model.vertex_features(&prepared)?;
    let all: Vec<usize> = (0..N_LANDMARKS).collect();
    let mouth: Vec<usize> = MOUTH.collect();
    Ok(layers
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let d = pairwise_distances(&f.slice(ndarray::s![..N_LANDMARKS, ..]).to_owned());
            let mean = mean_off_diagonal(&d, &all);
            let mouth_mean = mean_off_diagonal(&d, &mouth);
            let summary = LayerDistanceSummary {
                layer: i,
                file: format!("layer{i}.csv"),
                mean_distance: mean,
                mean_mouth_distance: mouth_mean,
                mouth_ratio: if mean > 0.0 { mouth_mean / mean } else { 0.0 },
            };
            (d, summary)
        })
        .collect())
}

fn cmd_distances(a: DistancesArgs) -> CliResult<()> {
    require_exists(&a.checkpoint, "checkpoint")?;
    require_exists(&a.data, "data path")?;
    let mut model = load_checkpoint_file(&a.checkpoint)?;
    let samples = load_samples(&a.data)?;
    let sample = match &a.sample {
        Some(id) => samples
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| CliError::Usage(format!("no sample with id {id}")))?,
        None => samples
            .iter()
            .find(|s| s.label == Label::Genuine)
            .ok_or_else(|| CliError::Usage("dataset has no genuine sample".into()))?,
    };
    std::fs::create_dir_all(&a.out)?;
    let mut summaries = Vec::new();
    for (d, summary) in landmark_distances(&mut model, sample)? {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(a.out.join(&summary.file)).map_err(Error::from)?;
        for row in d.rows() {
            w.write_record(row.iter().map(|v| format!("{v:.10e}"))).map_err(Error::from)?;
        }
        w.flush()?;
        summaries.push(summary);
    }
    write_json(&a.out.join("summary.json"), &summaries)?;
    println!("wrote {} distance matrices for sample {} to {}", summaries.len(), sample.id, a.out.display());
    Ok(())
}
