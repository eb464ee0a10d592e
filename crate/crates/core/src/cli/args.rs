use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "semtext", version, about = "Boilerplate detection for HTML pages")]
#[command(args_override_self = true)]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only errors and warnings.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    /// Flat `key = value` file supplying defaults for command flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label the blocks of HTML documents and print the main ones.
    Extract(ExtractArgs),
    /// Print the text blocks of HTML documents without labeling them.
    Segment(SegmentArgs),
    /// Train a model on a labeled JSONL dataset.
    Train(TrainArgs),
    /// Score a model against a labeled JSONL dataset.
    Eval(EvalArgs),
    /// Write a synthetic labeled dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Jsonl,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// HTML files or directories; standard input when empty or `-`.
    pub inputs: Vec<PathBuf>,
    /// Character encoding to assume when the document declares none.
    #[arg(long, value_name = "LABEL")]
    pub encoding: Option<String>,
    /// Documents processed in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Write here instead of standard output.
    #[arg(short, long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_name = "FILE", required_unless_present = "blocks_only")]
    pub model: Option<PathBuf>,
    /// Vector file; defaults to the one named in the model.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Also emit boilerplate blocks (JSONL only).
    #[arg(long)]
    pub all: bool,
    /// Skip labeling; emit every block as JSONL.
    #[arg(long)]
    pub blocks_only: bool,
    /// Append `id` attribute tokens to class paths (blocks-only mode;
    /// models carry their own setting).
    #[arg(long)]
    pub include_ids: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub include_ids: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Labeled pages, one JSON object per line.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Pre-trained vectors; without them every word uses the subword fallback.
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Continue from this model; its shapes override the shape flags.
    #[arg(long, value_name = "FILE")]
    pub init_from: Option<PathBuf>,
    /// Write the per-epoch log as JSON here.
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.0)]
    pub momentum: f64,
    /// Gradient norm clipping threshold.
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub validation_ratio: f64,
    /// Words kept per word string.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Longest block sub-sequence.
    #[arg(long, default_value_t = 85)]
    pub m: usize,
    /// Embedding dimension when no vector file is given.
    #[arg(long, default_value_t = 50)]
    pub k: usize,
    #[arg(long, default_value_t = 512)]
    pub hidden: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 7])]
    pub widths: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [128, 128, 256])]
    pub counts: Vec<usize>,
    /// Subword hash buckets.
    #[arg(long, default_value_t = 1 << 20)]
    pub buckets: u32,
    #[arg(long)]
    pub relu: bool,
    #[arg(long)]
    pub include_ids: bool,
    /// Ignore tag and class strings.
    #[arg(long)]
    pub text_only: bool,
    /// Worker threads for gradients; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub embeddings: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub pages: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub ambiguous: f64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
