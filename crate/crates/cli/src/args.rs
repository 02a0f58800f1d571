use std::ops::Range;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metahmm::{McSamples, PredictionFormat, TaskSubset};

/// Every long flag accepted by each subcommand, including the global ones.
/// Kept in sync with the clap definitions by a test.
pub const FLAG_REGISTRY: &[(&str, &[&str])] = &[
    ("env size", &["config", "seed", "workers"]),
    ("env dump", &["config", "seed", "workers", "out"]),
    ("split", &["config", "seed", "workers", "holdout", "sample-seed", "out"]),
    (
        "gen",
        &[
            "config",
            "seed",
            "workers",
            "subset",
            "split",
            "per-task",
            "total",
            "lengths",
            "length",
            "sample-seed",
            "out",
        ],
    ),
    ("oracle", &["config", "seed", "workers", "sequences", "subset", "split", "format", "out", "entropy"]),
    (
        "mc",
        &[
            "config",
            "seed",
            "workers",
            "sequences",
            "subset",
            "split",
            "samples",
            "sample-seed",
            "format",
            "out",
            "entropy",
        ],
    ),
    ("baseline", &["config", "seed", "workers", "train", "sequences", "format", "out"]),
    ("eval", &["config", "seed", "workers", "predictions", "reference", "subset", "window", "out", "summary"]),
    ("plot", &["config", "seed", "workers", "input", "title", "font", "out"]),
];

#[derive(Debug, Parser)]
#[command(
    name = "metahmm",
    version,
    about = "Generate MetaHMM environments, run the Bayes-optimal oracle and score predictors against it"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Environment config (.toml or .json); the standard 12288-task environment when omitted
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override the environment seed from the config
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads (0 = one per core)
    #[arg(long, global = true, env = "METAHMM_WORKERS", default_value_t = 0, value_name = "N")]
    pub workers: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Inspect the environment
    #[command(subcommand)]
    Env(EnvCommand),
    /// Split the tasks into training and validation sets
    Split(SplitArgs),
    /// Sample a sequence dataset
    Gen(GenArgs),
    /// Run the exact oracle and write its predictions
    Oracle(OracleArgs),
    /// Run the Monte Carlo predictor and write its predictions
    Mc(McArgs),
    /// Write predictions of a unigram model fitted to training sequences
    Baseline(BaselineArgs),
    /// Score predictions against a reference
    Eval(EvalArgs),
    /// Render curves from CSV files to SVG or PNG
    Plot(PlotArgs),
}

#[derive(Debug, Subcommand)]
pub enum EnvCommand {
    /// Print the number of tasks
    Size,
    /// Write the generated building blocks as JSON
    Dump {
        /// Output file (stdout when omitted)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Number of validation tasks
    #[arg(long, default_value_t = 1000, value_name = "N")]
    pub holdout: u64,
    #[arg(long, default_value_t = 0, value_name = "N", help = SAMPLE_SEED_HELP)]
    pub sample_seed: u64,
    /// Output split file
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

const SAMPLE_SEED_HELP: &str = "Seed for sampling, independent of the environment seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Lengths {
    /// Every sequence has exactly --length symbols
    Fixed,
    /// Lengths uniform in [1, --length]
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Bin,
    Jsonl,
}

impl From<Format> for PredictionFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Bin => PredictionFormat::Bin,
            Format::Jsonl => PredictionFormat::Jsonl,
        }
    }
}

#[derive(Debug, Args)]
pub struct TaskArgs {
    /// Tasks to use: all, train, validation, or a comma-separated index list
    #[arg(long, default_value = "all", value_parser = parse_subset, value_name = "SUBSET")]
    pub subset: TaskSubset,
    /// Split file, required for --subset train|validation
    #[arg(long, value_name = "PATH")]
    pub split: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("plan").required(true).args(["per_task", "total"]))]
pub struct GenArgs {
    #[command(flatten)]
    pub tasks: TaskArgs,
    /// Sequences per task
    #[arg(long, value_name = "N")]
    pub per_task: Option<usize>,
    /// Total sequences, each from a uniformly drawn task
    #[arg(long, value_name = "N")]
    pub total: Option<usize>,
    /// How sequence lengths are chosen
    #[arg(long, value_enum, default_value_t = Lengths::Fixed)]
    pub lengths: Lengths,
    /// Sequence length (maximum length with --lengths uniform)
    #[arg(long, default_value_t = 200, value_name = "T")]
    pub length: usize,
    #[arg(long, default_value_t = 0, value_name = "N", help = SAMPLE_SEED_HELP)]
    pub sample_seed: u64,
    /// Output sequence file; the manifest goes to <PATH>.manifest.json
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictOutput {
    /// Prediction file encoding
    #[arg(long, value_enum, default_value_t = Format::Bin)]
    pub format: Format,
    /// Output prediction file
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Input sequence file
    #[arg(long, value_name = "PATH")]
    pub sequences: PathBuf,
    #[command(flatten)]
    pub tasks: TaskArgs,
    #[command(flatten)]
    pub output: PredictOutput,
    /// Also write the mean posterior entropy per position as CSV
    #[arg(long, value_name = "PATH")]
    pub entropy: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Input sequence file
    #[arg(long, value_name = "PATH")]
    pub sequences: PathBuf,
    #[command(flatten)]
    pub tasks: TaskArgs,
    /// Tasks sampled per prediction, or "exact" for the full posterior sum
    #[arg(long, value_parser = parse_samples, value_name = "S")]
    pub samples: McSamples,
    #[arg(long, default_value_t = 0, value_name = "N", help = SAMPLE_SEED_HELP)]
    pub sample_seed: u64,
    #[command(flatten)]
    pub output: PredictOutput,
    /// Also write the mean posterior entropy per position as CSV
    #[arg(long, value_name = "PATH")]
    pub entropy: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Sequence file to fit the symbol frequencies on
    #[arg(long, value_name = "PATH")]
    pub train: PathBuf,
    /// Sequence file to predict
    #[arg(long, value_name = "PATH")]
    pub sequences: PathBuf,
    #[command(flatten)]
    pub output: PredictOutput,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predictions to score
    #[arg(long, value_name = "PATH")]
    pub predictions: PathBuf,
    /// Reference predictions, usually the oracle
    #[arg(long, value_name = "PATH")]
    pub reference: PathBuf,
    /// Label of the task subset the sequences came from, recorded in the summary
    #[arg(long, value_name = "LABEL")]
    pub subset: Option<String>,
    /// Restrict the summary to positions START..END
    #[arg(long, value_parser = parse_window, value_name = "START..END")]
    pub window: Option<Range<u32>>,
    /// Output CSV of the divergence per position
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// Output JSON summary (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Curve CSV, optionally labelled as LABEL=PATH; repeat for several curves
    #[arg(long, required = true, value_name = "[LABEL=]PATH")]
    pub input: Vec<String>,
    /// Chart title
    #[arg(long, value_name = "TEXT")]
    pub title: Option<String>,
    /// TrueType font used to lay out chart text
    #[arg(long, default_value = "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf", value_name = "PATH")]
    pub font: PathBuf,
    /// Output image; the extension (.svg or .png) selects the format
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

fn parse_subset(s: &str) -> Result<TaskSubset, String> {
    s.parse().map_err(|e: metahmm::Error| e.to_string())
}

fn parse_samples(s: &str) -> Result<McSamples, String> {
    if s == "exact" {
        return Ok(McSamples::Exact);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(McSamples::Count(n)),
        _ => Err(format!("expected a positive integer or \"exact\", got '{s}'")),
    }
}

fn parse_window(s: &str) -> Result<Range<u32>, String> {
    let err = || format!("expected START..END, got '{s}'");
    let (a, b) = s.split_once("..").ok_or_else(err)?;
    let (a, b): (u32, u32) = (a.parse().map_err(|_| err())?, b.parse().map_err(|_| err())?);
    if a >= b {
        return Err(format!("window {s} is empty"));
    }
    Ok(a..b)
}
