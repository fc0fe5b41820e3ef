//! Command-line front end for `sensalign`.
//!
//! Every command writes its machine-readable result to stdout (or `--out`)
//! and returns the process exit code: 0 on success, 1 on invalid input,
//! 2 on file-system failures.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

mod commands;
mod error;
pub mod sweep;

pub use commands::run;
pub use error::{CliError, EXIT_INVALID, EXIT_IO, EXIT_OK};
pub use sweep::{run_sweep, SweepCell, SweepConfig, SweepRow};

#[derive(Debug, Parser)]
#[command(name = "sensalign", version, about = "Representational alignment between language-model and sensory-encoder embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check embedding files against a dataset manifest.
    Validate(ValidateArgs),
    /// Mutual-kNN alignment with a bootstrap standard error.
    Align(AlignArgs),
    /// Linear CKA between two embedding files.
    Cka(CkaArgs),
    /// Project conditions onto the SEE-minus-HEAR axis.
    Project(ProjectArgs),
    /// Per-item neighbor overlap report as JSON lines.
    Neighbors(NeighborsArgs),
    /// Alignment of many cells against one reference, as CSV.
    Sweep(SweepArgs),
    /// Per-category accuracy table from a yes/no answer log.
    #[command(name = "vqa-score")]
    VqaScore(VqaScoreArgs),
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(required = true)]
    pub matrices: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, default_value_t = sensalign::DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = sensalign::stats::DEFAULT_REPLICATES)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also require both files to match this manifest's item count.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CkaArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub see: PathBuf,
    #[arg(long)]
    pub hear: PathBuf,
    /// Additional condition to project, as NAME=PATH. Repeatable.
    #[arg(long = "extra", value_name = "NAME=PATH")]
    pub extra: Vec<String>,
    #[arg(long, default_value_t = 512)]
    pub grid_points: usize,
    /// Write density curves as CSV (condition,x,density).
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Write per-item projections as CSV (condition,item_index,value).
    #[arg(long)]
    pub projections: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NeighborsArgs {
    /// Baseline condition.
    #[arg(long)]
    pub a: PathBuf,
    /// Condition compared against the baseline.
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = sensalign::DEFAULT_K)]
    pub k: usize,
    /// Keep only the first N items of the ranking (default: all).
    #[arg(long)]
    pub top: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep config in TOML or JSON.
    pub config: PathBuf,
    /// Overrides the config's k.
    #[arg(long)]
    pub k: Option<usize>,
    /// Overrides the config's bootstrap replicate count.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VqaScoreArgs {
    pub log: PathBuf,
    /// One row per condition and one column per category.
    #[arg(long)]
    pub wide: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
