//! Command-line surface.

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Federated matrix factorization: train, attack transcripts, benchmark.
#[derive(Parser, Debug)]
#[command(name = "fedmf", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train profiles: centralized, plaintext federated, or encrypted federated.
    Train(TrainArgs),
    /// Reconstruct a user's ratings from a recorded plaintext transcript.
    Attack(AttackArgs),
    /// Time encrypted iterations across item-count sweeps.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeArg {
    Centralized,
    Plaintext,
    Encrypted,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayloadArg {
    Full,
    Part,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayloadBothArg {
    Full,
    Part,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportArg {
    Memory,
    Tcp,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["data", "synthetic"]))]
pub struct TrainArgs {
    /// Execution mode.
    #[arg(long, value_enum)]
    pub mode: ModeArg,

    /// Gradient upload shape.
    #[arg(long, value_enum, default_value = "part")]
    pub payload: PayloadArg,

    /// MovieLens-format ratings.csv.
    #[arg(long)]
    pub data: Option<std::path::PathBuf>,

    /// Synthetic instance spec "NxMxD" (users x items x true rank).
    #[arg(long)]
    pub synthetic: Option<String>,

    /// Draw synthetic ratings uniformly from LO,HI instead of a low-rank model.
    #[arg(long, value_name = "LO,HI")]
    pub synthetic_ratings: Option<String>,

    /// Mask density for synthetic instances.
    #[arg(long, default_value_t = 1.0)]
    pub density: f64,

    /// Gaussian noise on synthetic low-rank ratings.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,

    /// Keep only the K most-rated items.
    #[arg(long)]
    pub items: Option<usize>,

    /// Latent dimension.
    #[arg(long, default_value_t = 100)]
    pub dim: usize,

    /// Iteration cap.
    #[arg(long, default_value_t = 100)]
    pub iters: usize,

    /// Learning rate.
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,

    /// User-profile regularization.
    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,

    /// Item-profile regularization.
    #[arg(long, default_value_t = 1e-4)]
    pub mu: f64,

    /// Stop once the largest payload component in a round drops below this.
    #[arg(long, default_value_t = 1e-4)]
    pub stop_threshold: f64,

    /// Profile initialization scale.
    #[arg(long, default_value_t = 0.1)]
    pub init_scale: f64,

    /// Paillier modulus bits (encrypted mode).
    #[arg(long, default_value_t = 256)]
    pub key_bits: u32,

    /// Fixed-point exponent (encrypted mode).
    #[arg(long, default_value_t = -40, allow_hyphen_values = true)]
    pub exponent: i64,

    /// Run seed (FEDMF_SEED overrides the default).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Record a transcript of snapshots and uploads (plaintext mode only).
    #[arg(long, value_name = "PATH")]
    pub record_transcript: Option<std::path::PathBuf>,

    /// Record uploads in the bare residual-product convention the inversion
    /// attack solves (unit user step, requires --lambda 0 --mu 0).
    #[arg(long, default_value_t = false)]
    pub attack_convention: bool,

    /// Embed the ground-truth ratings in the transcript for error reports.
    #[arg(long, default_value_t = false)]
    pub embed_truth: bool,

    /// Transport for federated modes.
    #[arg(long, value_enum, default_value = "memory")]
    pub transport: TransportArg,

    /// Output file for profiles and the loss history.
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    /// Transcript file recorded by `train --record-transcript`.
    #[arg(long)]
    pub transcript: std::path::PathBuf,

    /// Target user id.
    #[arg(long)]
    pub user: usize,

    /// Round t; the attack consumes rounds t and t+1.
    #[arg(long)]
    pub round: usize,

    /// Plausible rating range used to pick the root's sign.
    #[arg(long, value_name = "LO,HI")]
    pub rating_range: String,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Comma-separated item counts to sweep.
    #[arg(long, default_value = "40,80,160,320")]
    pub items: String,

    /// MovieLens-format ratings.csv; defaults to a synthetic stand-in with
    /// the ml-latest-small popularity curve.
    #[arg(long)]
    pub data: Option<std::path::PathBuf>,

    /// Paillier modulus bits.
    #[arg(long, default_value_t = 256)]
    pub key_bits: u32,

    /// Latent dimension.
    #[arg(long, default_value_t = 10)]
    pub dim: usize,

    /// Payload shapes to time.
    #[arg(long, value_enum, default_value = "both")]
    pub payload: PayloadBothArg,

    /// Fixed-point exponent.
    #[arg(long, default_value_t = -40, allow_hyphen_values = true)]
    pub exponent: i64,

    /// Run seed (FEDMF_SEED overrides the default).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Abort before starting a configuration once this much wall time has
    /// been spent.
    #[arg(long)]
    pub max_seconds: Option<f64>,

    /// JSON report path.
    #[arg(long)]
    pub out_json: Option<std::path::PathBuf>,

    /// CSV report path.
    #[arg(long)]
    pub out_csv: Option<std::path::PathBuf>,
}

/// Default seed: the FEDMF_SEED environment variable, else 0.
pub fn resolve_seed(cli_seed: Option<u64>) -> anyhow::Result<u64> {
    if let Some(seed) = cli_seed {
        return Ok(seed);
    }
    match std::env::var("FEDMF_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("FEDMF_SEED must be an unsigned integer, got {s:?}")),
        Err(_) => Ok(0),
    }
}

/// Parses "LO,HI" into a pair.
pub fn parse_range(s: &str) -> anyhow::Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| anyhow::anyhow!("expected LO,HI, got {s:?}"))?;
    let lo: f64 = lo.trim().parse()?;
    let hi: f64 = hi.trim().parse()?;
    if lo > hi {
        anyhow::bail!("range is empty: {lo} > {hi}");
    }
    Ok((lo, hi))
}

/// Parses "NxMxD".
pub fn parse_synthetic(s: &str) -> anyhow::Result<(usize, usize, usize)> {
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 3 {
        anyhow::bail!("expected NxMxD (e.g. 5x8x3), got {s:?}");
    }
    Ok((
        parts[0].trim().parse()?,
        parts[1].trim().parse()?,
        parts[2].trim().parse()?,
    ))
}

/// Parses a comma-separated list of item counts.
pub fn parse_items_list(s: &str) -> anyhow::Result<Vec<usize>> {
    let items: Vec<usize> = s
        .split(',')
        .map(|part| part.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| anyhow::anyhow!("expected comma-separated item counts, got {s:?}"))?;
    if items.is_empty() {
        anyhow::bail!("item sweep is empty");
    }
    Ok(items)
}
