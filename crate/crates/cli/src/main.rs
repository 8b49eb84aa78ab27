//! `trafsvm`: packet-capture CSV to ARFF conversion, SVM training and evaluation,
//! and weekly traffic reports.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Failure;

#[derive(Debug, Parser)]
#[command(name = "trafsvm", version, about = "Packet-capture classification and traffic reports")]
pub struct Cli {
    /// Seed for shuffling and randomised SMO selection.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration file; command-line flags override it.
    #[arg(long, global = true, env = "TRAFSVM_CONFIG")]
    pub config: Option<PathBuf>,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Only report errors on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert packet-list CSV exports into one ARFF dataset.
    Convert(ConvertArgs),
    /// Concatenate packet-list CSV exports into one CSV.
    Merge(MergeArgs),
    /// Train a one-vs-one SVM on an ARFF dataset.
    Train(TrainArgs),
    /// Evaluate a saved model on the held-out rows of a dataset.
    Evaluate(EvaluateArgs),
    /// Predict the class of every row of a dataset.
    Predict(PredictArgs),
    /// Weekly traffic tables from CSV or ARFF batches.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct CsvArgs {
    /// Drop malformed rows with a warning instead of failing.
    #[arg(long)]
    pub skip_malformed: bool,
    /// Field delimiter.
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Header row handling: auto, present or absent.
    #[arg(long)]
    pub header: Option<String>,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Packet-list CSV files, merged in the order given.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output ARFF file (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Relation name (defaults to the first input's file stem).
    #[arg(long)]
    pub label: Option<String>,
    /// 1-based attribute positions to drop, e.g. `1,2,3,7`.
    #[arg(long)]
    pub remove: Option<String>,
    /// Type the Info column as nominal instead of string.
    #[arg(long)]
    pub info_nominal: bool,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output CSV file (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// ARFF dataset.
    pub input: PathBuf,
    /// Model file to write.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Class attribute name.
    #[arg(long)]
    pub class: Option<String>,
    /// 1-based attribute positions to drop before training.
    #[arg(long)]
    pub remove: Option<String>,
    /// Percentage of rows used for training.
    #[arg(long)]
    pub split: Option<f64>,
    /// Shuffle rows (seeded) before splitting.
    #[arg(long)]
    pub shuffle: bool,
    /// linear, polynomial, rbf or sigmoid.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Kernel gamma; 0 means 1/dimension.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub coef0: Option<f64>,
    /// Box constraint C.
    #[arg(short = 'C', long = "cost")]
    pub c: Option<f64>,
    /// KKT tolerance.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Kernel cache size in f64 entries.
    #[arg(long)]
    pub cache_budget: Option<usize>,
    /// second_order or random_second.
    #[arg(long)]
    pub selection: Option<String>,
    /// Pass numeric features through unscaled.
    #[arg(long)]
    pub no_scale: bool,
    /// Fold nominal values seen fewer than this many times into a bucket.
    #[arg(long)]
    pub rare_min_support: Option<usize>,
    #[arg(long)]
    pub rare_label: Option<String>,
    /// Train pairwise models one at a time.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model file written by `train`.
    pub model: PathBuf,
    /// ARFF dataset holding the rows the model was trained on.
    pub input: PathBuf,
    /// Rows to score: test, train or all.
    #[arg(long)]
    pub on: Option<String>,
    /// Batch label recorded in the JSON output (defaults to the relation name without filter suffixes).
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    pub model: PathBuf,
    pub input: PathBuf,
    /// Output CSV file (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Batches as packet-list CSV (`.csv`) or ARFF files, one per week.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Batch labels, one per input (defaults to file stems).
    #[arg(long = "label")]
    pub labels: Vec<String>,
    /// Rows per frequency table before the remainder row; 0 keeps all.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// text, csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// JSON files written by `evaluate --json`, joined by batch label.
    #[arg(long = "eval")]
    pub evals: Vec<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub csv: CsvArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_target(false)
        .format_timestamp(None)
        .init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
