use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pfe", version, about = "Piecewise flat embedding and segmentation")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute an embedding for an image or an edge-list graph.
    Embed(EmbedArgs),
    /// Cluster an embedding into a label map with k-means.
    Segment(SegmentArgs),
    /// Score label maps against ground truth.
    Evaluate(EvaluateArgs),
    /// Sweep embedding dimensions over a dataset and report the best per image.
    Benchmark(BenchmarkArgs),
}

/// Solver and graph settings shared by `embed` and `benchmark`.
#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Heat-kernel width; defaults to the median neighbour colour distance.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub soc_max: usize,
    #[arg(long = "sb-max1", default_value_t = 5)]
    pub sb_max1: usize,
    /// Stage II split Bregman cap; 0 skips stage II.
    #[arg(long = "sb-max2", default_value_t = 100)]
    pub sb_max2: usize,
    /// Relative residual tolerance of the inner PCG solves.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Relative change of Y that ends an outer or inner loop early.
    #[arg(long, default_value_t = 1e-4)]
    pub conv_tol: f64,
    /// Box-downsampling factor applied to image input.
    #[arg(long, default_value_t = 4)]
    pub downsample: usize,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Image (binary PPM, or PNG when built with the `png` feature) or `i j w` edge list.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Append `filename,d,seconds` for the solve.
    #[arg(long)]
    pub timing_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Embedding file written by `embed`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Label map layout `HxW`; required for PGM output.
    #[arg(long)]
    pub shape: Option<Shape>,
    /// Output format; guessed from the extension when absent.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted label map, or a directory of them.
    #[arg(long)]
    pub input: PathBuf,
    /// Ground-truth label map; repeatable.
    #[arg(long)]
    pub gt: Vec<PathBuf>,
    /// Directory searched for `<stem>.*`, `<stem>_*.*` or `<stem>/*`.
    #[arg(long)]
    pub gt_dir: Option<PathBuf>,
    /// Append `file,covering,pri,vi` rows here.
    #[arg(long)]
    pub append_csv: Option<PathBuf>,
    /// Upsample predictions to ground-truth resolution instead of reducing the ground truth.
    #[arg(long)]
    pub score_original: bool,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Directory of images.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub gt_dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 64)]
    pub k: usize,
    /// Metric that picks the best dimension per image.
    #[arg(long, value_enum, default_value_t = Select::Covering)]
    pub select: Select,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub timing_csv: Option<PathBuf>,
    /// Per-image summary CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub score_original: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Pgm,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Select {
    Covering,
    Pri,
    Vi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
}

impl FromStr for Shape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (h, w) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected HxW, got {s:?}"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("bad size {v:?}: {e}"));
        Ok(Shape {
            height: parse(h)?,
            width: parse(w)?,
        })
    }
}
