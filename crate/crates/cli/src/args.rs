use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use zcore::config::load_config_file;
use zcore::{DistributionKind, Result, ScoreConfig};

#[derive(Debug, Parser)]
#[command(name = "zcore", version, about = "Zero-shot coreset selection from embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every example of one or more embedding matrices.
    Score(ScoreArgs),
    /// Keep the highest-scored examples and write loss weights.
    Select(SelectArgs),
    /// Per-dimension min, median and max of an embedding matrix.
    Stats(StatsArgs),
    /// Generate a synthetic embedding matrix from a cluster spec.
    Synth(SynthArgs),
    /// Compare one real embedding column with probe-law draws.
    CheckDist(CheckDistArgs),
    /// Check the parallel engine against the serial reference scorer.
    Verify(VerifyArgs),
}

/// Scoring parameters. Unset flags fall back to `--config`, then defaults.
#[derive(Debug, Args, Default)]
pub struct ConfigFlags {
    /// Key = value file applied before the flags below.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Number of sampling iterations.
    #[arg(long = "T", value_name = "T")]
    pub iterations: Option<u64>,
    /// Dimensions sampled per iteration.
    #[arg(long = "m", value_name = "M")]
    pub sample_dims: Option<usize>,
    /// Neighbors penalized per iteration.
    #[arg(long = "alpha")]
    pub neighbors: Option<usize>,
    /// Distance exponent of the redundancy penalty.
    #[arg(long = "beta")]
    pub distance_exponent: Option<f64>,
    /// Per-dimension probe law.
    #[arg(long = "dist", value_name = "KIND")]
    pub kind: Option<DistributionKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub no_redundancy: bool,
    #[arg(long)]
    pub no_random_init: bool,
}

impl ConfigFlags {
    pub fn resolve(&self, mut config: ScoreConfig) -> Result<ScoreConfig> {
        if let Some(path) = &self.config {
            load_config_file(&mut config, path)?;
        }
        if let Some(v) = self.iterations {
            config.iterations = v;
        }
        if let Some(v) = self.sample_dims {
            config.sample_dims = v;
        }
        if let Some(v) = self.neighbors {
            config.neighbors = v;
        }
        if let Some(v) = self.distance_exponent {
            config.distance_exponent = v;
        }
        if let Some(v) = self.kind {
            config.kind = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = self.workers {
            config.workers = v;
        }
        if self.no_redundancy {
            config.enable_redundancy = false;
        }
        if self.no_random_init {
            config.enable_random_init = false;
        }
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Embedding matrix; repeat to concatenate column-wise in order.
    #[arg(long = "emb", required = true, value_name = "FILE")]
    pub embeddings: Vec<PathBuf>,
    /// Output score file, `.npy` or `.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Z-score every column after concatenation.
    #[arg(long)]
    pub standardize: bool,
    #[command(flatten)]
    pub config: ConfigFlags,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Score file written by `zcore score`.
    #[arg(long)]
    pub scores: PathBuf,
    /// Fraction of examples to prune, in [0, 1).
    #[arg(long)]
    pub rate: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "emb", required = true, value_name = "FILE")]
    pub embeddings: Vec<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON cluster spec; the built-in two-cluster example when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Seed for the built-in example.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output matrix; `.npy` writes npy, anything else the raw format.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckDistArgs {
    #[arg(long = "emb", required = true, value_name = "FILE")]
    pub embeddings: Vec<PathBuf>,
    #[arg(long)]
    pub dim: usize,
    #[arg(long = "dist", value_name = "KIND", default_value_t = DistributionKind::Triangular)]
    pub kind: DistributionKind,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON cluster spec; the built-in two-cluster example when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Largest accepted engine/oracle difference.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Adds this amount to the engine's first score before comparing.
    #[arg(long, hide = true)]
    pub perturb: Option<f64>,
    #[command(flatten)]
    pub config: ConfigFlags,
}
