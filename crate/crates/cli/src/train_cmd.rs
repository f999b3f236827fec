//! `fedmf train`: run one of the three trainers and write profiles plus the
//! loss history. Output files contain no timing, so reruns with the same
//! seed are byte-identical.

use anyhow::{bail, Context};
use serde::Serialize;

use fedmf_core::data::{parse_ratings, select_top_items, synth_lowrank, synth_uniform, LoadedRatings};
use fedmf_core::{
    train_centralized, PayloadMode, PayloadRule, ProfileMatrix, RatingTable, Scalar, TrainConfig,
    TrainResult,
};
use fedmf_protocol::wire::real_to_string;
use fedmf_protocol::{run_federation, write_transcript, Mode, RunOptions, Transport};

use crate::args::{parse_range, parse_synthetic, resolve_seed, ModeArg, PayloadArg, TrainArgs, TransportArg};

#[derive(Serialize)]
struct TrainReport {
    mode: &'static str,
    payload: &'static str,
    n_users: usize,
    n_items: usize,
    n_ratings: usize,
    dim: usize,
    seed: u64,
    learning_rate: String,
    lambda: String,
    mu: String,
    rounds: usize,
    loss_history: Vec<String>,
    user_profiles: Vec<Vec<String>>,
    item_profiles: Vec<Vec<String>>,
}

fn profile_strings(p: &ProfileMatrix<Scalar>) -> Vec<Vec<String>> {
    p.iter_rows()
        .map(|row| row.iter().map(|&x| real_to_string(x)).collect())
        .collect()
}

/// Loads or synthesizes the rating table per the CLI flags.
pub fn load_table(args: &TrainArgs, seed: u64) -> anyhow::Result<RatingTable<Scalar>> {
    let mut loaded: LoadedRatings<Scalar> = if let Some(path) = &args.data {
        parse_ratings(path).with_context(|| format!("reading {}", path.display()))?
    } else {
        let spec = args.synthetic.as_ref().expect("clap enforces the input group");
        let (n, m, d_true) = parse_synthetic(spec)?;
        let table = match &args.synthetic_ratings {
            Some(range) => {
                let (lo, hi) = parse_range(range)?;
                synth_uniform(n, m, args.density, lo, hi, seed)?
            }
            None => synth_lowrank(n, m, d_true, args.noise, args.density, seed)?.0,
        };
        LoadedRatings {
            user_ids: (0..table.n_users() as u64).collect(),
            item_ids: (0..table.n_items() as u64).collect(),
            table,
        }
    };
    if let Some(k) = args.items {
        loaded = select_top_items(&loaded, k, false)?;
    }
    Ok(loaded.table)
}

pub fn run(args: &TrainArgs) -> anyhow::Result<()> {
    let seed = resolve_seed(args.seed)?;
    let ratings = load_table(args, seed)?;
    let config = TrainConfig {
        dim: args.dim,
        learning_rate: args.lr,
        lambda_u: args.lambda,
        mu_v: args.mu,
        max_iters: args.iters,
        stop_threshold: args.stop_threshold,
        seed,
        init_scale: args.init_scale,
    };
    let payload_mode = match args.payload {
        PayloadArg::Full => PayloadMode::FullText,
        PayloadArg::Part => PayloadMode::PartText,
    };
    let rule = if args.attack_convention {
        PayloadRule::RawResidual
    } else {
        PayloadRule::ScaledGradient
    };
    if args.record_transcript.is_some() && args.mode != ModeArg::Plaintext {
        bail!("--record-transcript requires --mode plaintext");
    }

    let (result, transcript) = match args.mode {
        ModeArg::Centralized => {
            if args.attack_convention {
                bail!("--attack-convention requires a federated mode");
            }
            (train_centralized(&ratings, &config)?, None)
        }
        ModeArg::Plaintext | ModeArg::Encrypted => {
            let opts = RunOptions {
                mode: if args.mode == ModeArg::Plaintext {
                    Mode::Plaintext
                } else {
                    Mode::Encrypted
                },
                payload_mode,
                rule,
                transport: match args.transport {
                    TransportArg::Memory => Transport::InMemory,
                    TransportArg::Tcp => Transport::Tcp,
                },
                key_bits: args.key_bits,
                exponent: args.exponent,
                record_transcript: args.record_transcript.is_some(),
                record_loss: true,
                capture_server_bytes: false,
            };
            let run = run_federation(&ratings, &config, &opts)?;
            (
                TrainResult {
                    users: run.users,
                    items: run.items,
                    loss_history: run.loss_history,
                    rounds: run.rounds,
                },
                run.transcript,
            )
        }
    };

    if let Some(path) = &args.record_transcript {
        let mut transcript = transcript.expect("plaintext run recorded a transcript");
        if args.embed_truth {
            transcript.ground_truth = Some(ratings.clone());
        }
        write_transcript(path, &transcript)
            .with_context(|| format!("writing transcript {}", path.display()))?;
    }

    let report = TrainReport {
        mode: match args.mode {
            ModeArg::Centralized => "centralized",
            ModeArg::Plaintext => "plaintext",
            ModeArg::Encrypted => "encrypted",
        },
        payload: match args.payload {
            PayloadArg::Full => "full",
            PayloadArg::Part => "part",
        },
        n_users: ratings.n_users(),
        n_items: ratings.n_items(),
        n_ratings: ratings.len(),
        dim: config.dim,
        seed,
        learning_rate: real_to_string(config.learning_rate),
        lambda: real_to_string(config.lambda_u),
        mu: real_to_string(config.mu_v),
        rounds: result.rounds,
        loss_history: result.loss_history.iter().map(|&x| real_to_string(x)).collect(),
        user_profiles: profile_strings(&result.users),
        item_profiles: profile_strings(&result.items),
    };
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&args.out, json.as_bytes())
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}
