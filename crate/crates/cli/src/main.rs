//! `gbmfuse`: preprocessing, augmentation preview, label fusion, evaluation
//! and reporting for BraTS-style segmentations.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "gbmfuse", version, about = "Ensemble fusion and evaluation of brain tumour segmentations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Crop to the joint brain box, fit to the target grid and z-score each modality.
    Preprocess(PreprocessArgs),
    /// Draw seeded augmentation parameters, optionally applying them to a volume.
    Augment(AugmentArgs),
    /// Fuse per-method label maps case by case.
    Fuse(FuseArgs),
    /// Score predictions against ground truth and write CSV, JSON and table reports.
    Evaluate(EvaluateArgs),
    /// Aggregate per-case CSV reports of several methods and rank them.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    /// Modality volumes of one case (sharing a grid).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Optional segmentation cropped alongside the modalities.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Output directory; files keep their names.
    #[arg(long)]
    out: PathBuf,
    /// Target grid as X,Y,Z.
    #[arg(long, value_delimiter = ',', default_values_t = [192usize, 224, 160])]
    target: Vec<usize>,
    /// Skip z-score normalization.
    #[arg(long)]
    no_zscore: bool,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[arg(long)]
    seed: u64,
    /// Intensity volume to augment.
    #[arg(long, requires = "out")]
    input: Option<PathBuf>,
    /// Label volume to augment with the same spatial transform.
    #[arg(long, requires = "labels_out")]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FuseMethod {
    Mean,
    Vote,
    Staple,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Precision {
    F32,
    F64,
}

#[derive(Args, Debug)]
struct FuseArgs {
    /// One directory per method, or a single directory whose subdirectories are the methods.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FuseMethod::Staple)]
    method: FuseMethod,
    /// Shorthand for `--method staple`.
    #[arg(long, conflicts_with = "method")]
    staple: bool,
    /// Cases with fewer enhancing-tumour voxels than this get them relabelled as necrosis.
    #[arg(long, default_value_t = gbm_fusion::DEFAULT_ET_THRESHOLD)]
    et_threshold: usize,
    #[arg(long, default_value_t = 50)]
    staple_max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    staple_tol: f64,
    /// Scalar type used by the STAPLE iterations.
    #[arg(long, value_enum, default_value_t = Precision::F64)]
    precision: Precision,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long, required_unless_present = "manifest")]
    pred: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    gt: Option<PathBuf>,
    /// CSV with columns case_id,pred,gt; replaces filename pairing.
    #[arg(long, conflicts_with_all = ["pred", "gt"])]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// HD95 assigned when exactly one of prediction and truth is empty (mm).
    #[arg(long, default_value_t = 373.1287)]
    hd95_penalty: f64,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Per-case CSV files, each as NAME=PATH or PATH (name from the file stem).
    #[arg(required = true)]
    inputs: Vec<String>,
    /// Directory for ranking.json and ranking.tsv.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped onto process exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<gbm_fusion::Error> for Failure {
    fn from(e: gbm_fusion::Error) -> Self {
        Failure::Data(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Augment(a) => commands::augment(a),
        Command::Fuse(a) => commands::fuse(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Report(a) => commands::report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
