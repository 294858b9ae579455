//! `mvsc`: generate synthetic multi-view data, train, re-cluster, score and
//! export results.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mvsc_core::dataset::{
    generate_synthetic, load_manifest, read_labels_csv, write_labels_csv, write_matrix_csv, SyntheticSpec,
};
use mvsc_core::metrics::{evaluate, EvaluationReport};
use mvsc_core::trainer::{cluster_checkpoint, moving_average, Checkpoint};
use mvsc_core::{build_affinity, train, Architecture, Error, TrainConfig, TrainLog};

use config::RunConfig;

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LABELS_FILE: &str = "labels.csv";
pub const LOG_FILE: &str = "trainlog.csv";
pub const AFFINITY_FILE: &str = "affinity.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const LOSS_CURVE_FILE: &str = "loss_curve.csv";

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    /// Bad flags or unusable inputs.
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    /// Training or clustering failed on valid inputs.
    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFiniteLoss { .. } | Error::NoConvergence { .. } => Self::runtime(e.to_string()),
            // Output directories are created up front, so remaining i/o
            // failures are almost always missing or unreadable inputs.
            _ => Self::usage(e.to_string()),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "mvsc", version, about = "Multi-view deep subspace clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic union-of-subspaces dataset.
    Generate(GenerateArgs),
    /// Pretrain, fine-tune and cluster a dataset.
    Train(TrainArgs),
    /// Re-run spectral clustering on a saved checkpoint.
    Cluster(ClusterArgs),
    /// Score predicted labels against ground truth; prints JSON.
    Evaluate(EvaluateArgs),
    /// Export the affinity heatmap and loss curve as CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    clusters: usize,
    #[arg(long)]
    per_cluster: usize,
    #[arg(long, default_value_t = 2)]
    views: usize,
    /// Ambient dimension of each view.
    #[arg(long, value_delimiter = ',', required = true)]
    dims: Vec<usize>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rank: u64,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with any training option plus `manifest` and `out`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the short pretraining schedule for small problems.
    #[arg(long)]
    desk_scale: bool,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    lambda1: Option<f64>,
    /// Derive lambda1 from the cluster count.
    #[arg(long)]
    lambda1_from_clusters: bool,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    lambda3: Option<f64>,
    #[arg(long)]
    lambda4: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long)]
    finetune_epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Encoder widths shared by every view, e.g. 8,6,4.
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    #[arg(long)]
    eval_every: Option<usize>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Defaults to the cluster count stored in the checkpoint.
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth labels; adds metrics.json.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    pred: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Labels used to group samples in the heatmap.
    #[arg(long)]
    order_by: Option<PathBuf>,
    /// Moving-average window for the loss curve.
    #[arg(long, default_value_t = 10)]
    window: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Train(a) => cmd_train(a),
        Command::Cluster(a) => cmd_cluster(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn create_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_metrics(path: &Path, report: &EvaluationReport) -> CliResult {
    let text = serde_json::to_string_pretty(report).expect("metrics serialize");
    write_text(path, &(text + "\n"))
}

fn cmd_generate(a: GenerateArgs) -> CliResult {
    let spec = SyntheticSpec {
        k: a.clusters,
        per_cluster: a.per_cluster,
        views: a.views,
        ambient_dims: a.dims,
        subspace_rank: a.rank as usize,
        noise_sigma: a.noise,
        seed: a.seed,
    };
    let ds = generate_synthetic(&spec)?;
    create_dir(&a.out)?;
    let manifest = ds.save(&a.out)?;
    println!("{}", manifest.display());
    Ok(())
}

fn resolve_run(a: &TrainArgs) -> CliResult<RunConfig> {
    let base = if a.desk_scale {
        TrainConfig::desk_scale()
    } else {
        TrainConfig::default()
    };
    let mut run = RunConfig::new(base);
    if let Some(path) = &a.config {
        run = run.apply_file(path)?;
    }
    let t = &mut run.train;
    let overrides = [
        (&mut t.lambda1, a.lambda1),
        (&mut t.lambda2, a.lambda2),
        (&mut t.lambda3, a.lambda3),
        (&mut t.lambda4, a.lambda4),
        (&mut t.learning_rate, a.learning_rate),
    ];
    for (slot, flag) in overrides {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    if a.lambda1_from_clusters {
        t.lambda1_from_clusters = true;
    }
    if let Some(v) = a.pretrain_epochs {
        t.pretrain_epochs = v;
    }
    if let Some(v) = a.finetune_epochs {
        t.finetune_epochs = v;
    }
    if let Some(v) = a.eval_every {
        t.eval_every = v;
    }
    if let Some(v) = a.seed {
        t.seed = v;
    }
    if let Some(k) = a.clusters {
        t.clusters = Some(k);
    }
    if let Some(w) = &a.widths {
        t.architectures = vec![Architecture::dense(w)];
    }
    if let Some(p) = &a.manifest {
        run.manifest = Some(p.clone());
    }
    if let Some(p) = &a.out {
        run.out = Some(p.clone());
    }
    run.train.validate()?;
    Ok(run)
}

fn cmd_train(a: TrainArgs) -> CliResult {
    let run = resolve_run(&a)?;
    let manifest = run
        .manifest
        .ok_or_else(|| CliError::usage("no manifest given (use --manifest or the config file)"))?;
    let out = run
        .out
        .ok_or_else(|| CliError::usage("no output directory given (use --out or the config file)"))?;
    if !manifest.is_file() {
        return Err(CliError::usage(format!("manifest not found: {}", manifest.display())));
    }
    let ds = load_manifest(&manifest)?;
    let result = train(&ds, &run.train)?;
    if !result.model.is_finite() || result.affinity.as_array().iter().any(|v| !v.is_finite()) {
        return Err(CliError::runtime("training produced non-finite parameters"));
    }
    create_dir(&out)?;
    result.checkpoint().save(out.join(CHECKPOINT_FILE))?;
    write_labels_csv(out.join(LABELS_FILE), &result.labels)?;
    result.log.write_csv(out.join(LOG_FILE))?;
    write_matrix_csv(out.join(AFFINITY_FILE), result.affinity.as_array())?;
    if let Some(m) = &result.metrics {
        write_metrics(&out.join(METRICS_FILE), m)?;
        println!("{}", serde_json::to_string(m).expect("metrics serialize"));
    }
    Ok(())
}

fn cmd_cluster(a: ClusterArgs) -> CliResult {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let k = a
        .clusters
        .or(ckpt.clusters)
        .ok_or_else(|| CliError::usage("checkpoint has no cluster count; pass --clusters"))?;
    let truth = a.truth.as_ref().map(read_labels_csv).transpose()?;
    let labels = cluster_checkpoint(&ckpt, k)?;
    create_dir(&a.out)?;
    write_labels_csv(a.out.join(LABELS_FILE), &labels)?;
    if let Some(truth) = truth {
        let report = evaluate(&truth, &labels)?;
        write_metrics(&a.out.join(METRICS_FILE), &report)?;
        println!("{}", serde_json::to_string(&report).expect("metrics serialize"));
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> CliResult {
    let truth = read_labels_csv(&a.truth)?;
    let pred = read_labels_csv(&a.pred)?;
    if truth.len() != pred.len() {
        return Err(CliError::usage(format!(
            "label length mismatch: {} has {}, {} has {}",
            a.truth.display(),
            truth.len(),
            a.pred.display(),
            pred.len()
        )));
    }
    let report = evaluate(&truth, &pred)?;
    println!("{}", serde_json::to_string(&report).expect("metrics serialize"));
    Ok(())
}

/// Stable order that groups samples by label, for a block-diagonal heatmap.
fn grouping_order(labels: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&i| labels[i]);
    order
}

fn loss_curve_csv(log: &TrainLog, window: usize) -> String {
    let totals = log.totals();
    let smoothed = moving_average(&totals, window);
    let mut out = String::from(
        "epoch,ae_loss,selfexpr_loss,lp_loss,universality_loss,diversity_loss,total,total_moving_average\n",
    );
    for (i, r) in log.epochs.iter().enumerate() {
        let l = &r.loss;
        // The trailing average is defined once a full window has been seen.
        let ma = (i + 1).checked_sub(window).map(|j| smoothed[j]);
        let cells = [
            l.ae_loss,
            l.selfexpr_loss,
            l.lp_loss,
            l.universality_loss,
            l.diversity_loss,
            l.total,
        ];
        out.push_str(&r.epoch.to_string());
        for v in cells {
            out.push(',');
            out.push_str(&format!("{v:.16e}"));
        }
        out.push(',');
        if let Some(v) = ma {
            out.push_str(&format!("{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

fn cmd_report(a: ReportArgs) -> CliResult {
    if a.window == 0 {
        return Err(CliError::usage("--window must be at least 1"));
    }
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let log = TrainLog::read_csv(&a.log)?;
    let affinity = build_affinity(&ckpt.state.common)?.into_inner();
    let affinity = match &a.order_by {
        Some(path) => {
            let labels = read_labels_csv(path)?;
            if labels.len() != affinity.nrows() {
                return Err(CliError::usage(format!(
                    "{} has {} labels but the checkpoint has {} samples",
                    path.display(),
                    labels.len(),
                    affinity.nrows()
                )));
            }
            let order = grouping_order(&labels);
            ndarray::Array2::from_shape_fn(affinity.dim(), |(i, j)| affinity[[order[i], order[j]]])
        }
        None => affinity,
    };
    create_dir(&a.out)?;
    write_matrix_csv(a.out.join(AFFINITY_FILE), &affinity)?;
    write_text(&a.out.join(LOSS_CURVE_FILE), &loss_curve_csv(&log, a.window))?;
    Ok(())
}
