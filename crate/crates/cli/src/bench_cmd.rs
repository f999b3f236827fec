//! `fedmf bench`: time encrypted federation iterations across item-count
//! sweeps, mirroring the per-iteration cost table and the client/server
//! time split. Each configuration runs one warm-up iteration and times the
//! next; non-timing fields are reproducible for a fixed seed.

use anyhow::{bail, Context};
use serde::Serialize;
use std::time::Instant;

use fedmf_core::data::{parse_ratings, select_top_items, synth_movielens_like, LoadedRatings};
use fedmf_core::{PayloadMode, PayloadRule, Scalar, TrainConfig};
use fedmf_protocol::{run_federation, Mode, RunOptions, Transport};

use crate::args::{parse_items_list, resolve_seed, BenchArgs, PayloadBothArg};

/// Published FedMF reference measurements (seconds per iteration at
/// 1024-bit keys, dim 100, 610 users, different hardware): they sit beside
/// the measured values for inspection, never for assertion.
/// `(items, ratings, parttext_seconds, fulltext_seconds)`.
pub const REFERENCE_TIMINGS: &[(usize, usize, f64, f64)] = &[
    (40, 8307, 34.39, 90.94),
    (50, 9807, 44.05, 113.34),
    (60, 11214, 46.34, 141.52),
    (80, 13817, 52.91, 182.27),
    (160, 22282, 92.81, 374.85),
    (320, 34172, 140.51, 725.72),
    (640, 49706, 178.24, 1479.40),
    (1280, 67558, 264.10, 2919.91),
    (2560, 83616, 334.79, 5786.01),
];

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub items: usize,
    pub ratings: usize,
    pub payload: String,
    pub seconds_per_iteration: f64,
    /// Sum of all users' compute time in the timed iteration.
    pub client_seconds: f64,
    /// Slowest single user's compute time: the client phase of a deployment
    /// where users run in parallel on their own devices.
    pub client_seconds_max: f64,
    pub server_seconds: f64,
    pub bytes_per_iteration: u64,
    /// Transfer time the measured bytes would take on a 1 Gb/s link.
    pub modeled_transfer_seconds_1gbps: f64,
    /// Published reference seconds for this item count, when available.
    pub ref_seconds: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub key_bits: u32,
    pub dim: usize,
    pub exponent: i64,
    pub seed: u64,
    pub n_users: usize,
    pub data: String,
    pub rows: Vec<BenchRow>,
}

/// Times one encrypted iteration (after one warm-up) for every requested
/// `(item count, payload shape)` pair.
pub fn run_sweep(
    data: &LoadedRatings<Scalar>,
    data_label: &str,
    items: &[usize],
    payloads: &[PayloadMode],
    key_bits: u32,
    dim: usize,
    exponent: i64,
    seed: u64,
    max_seconds: Option<f64>,
) -> anyhow::Result<BenchReport> {
    let started = Instant::now();
    let mut rows = Vec::new();
    for &k in items {
        let subset = select_top_items(data, k, false)?;
        for &payload in payloads {
            if let Some(budget) = max_seconds {
                let elapsed = started.elapsed().as_secs_f64();
                if elapsed > budget {
                    bail!(
                        "time budget exhausted ({elapsed:.1}s > {budget:.1}s) before \
                         items={k} payload={payload:?}; completed {} rows",
                        rows.len()
                    );
                }
            }
            let config = TrainConfig {
                dim,
                learning_rate: 0.01,
                lambda_u: 1e-4,
                mu_v: 1e-4,
                max_iters: 2, // warm-up iteration + the timed one
                stop_threshold: 0.0,
                seed,
                init_scale: 0.1,
            };
            let opts = RunOptions {
                mode: Mode::Encrypted,
                payload_mode: payload,
                rule: PayloadRule::ScaledGradient,
                transport: Transport::InMemory,
                key_bits,
                exponent,
                record_transcript: false,
                record_loss: false,
                capture_server_bytes: false,
            };
            let run = run_federation(&subset.table, &config, &opts)?;
            let timed = run
                .metrics
                .per_round
                .get(1)
                .context("bench run must complete two iterations")?;
            let bytes = timed.bytes_up + timed.bytes_down;
            rows.push(BenchRow {
                items: k,
                ratings: subset.table.len(),
                payload: match payload {
                    PayloadMode::FullText => "full".into(),
                    PayloadMode::PartText => "part".into(),
                },
                seconds_per_iteration: timed.wall_seconds,
                client_seconds: timed.client_seconds,
                client_seconds_max: timed.client_seconds_max,
                server_seconds: timed.server_seconds,
                bytes_per_iteration: bytes,
                modeled_transfer_seconds_1gbps: bytes as f64 * 8.0 / 1e9,
                ref_seconds: REFERENCE_TIMINGS.iter().find(|r| r.0 == k).map(|r| {
                    match payload {
                        PayloadMode::PartText => r.2,
                        PayloadMode::FullText => r.3,
                    }
                }),
            });
        }
    }
    Ok(BenchReport {
        key_bits,
        dim,
        exponent,
        seed,
        n_users: data.table.n_users(),
        data: data_label.into(),
        rows,
    })
}

/// One CSV line per item count, columns mirroring the reference table plus
/// the measured split and traffic.
pub fn to_csv(report: &BenchReport) -> String {
    let mut out = String::from(
        "items,ratings,parttext_seconds,fulltext_seconds,\
         parttext_client_seconds,parttext_client_max_seconds,parttext_server_seconds,parttext_bytes,\
         fulltext_client_seconds,fulltext_client_max_seconds,fulltext_server_seconds,fulltext_bytes,\
         ref_parttext_seconds,ref_fulltext_seconds\n",
    );
    let mut items: Vec<usize> = report.rows.iter().map(|r| r.items).collect();
    items.sort_unstable();
    items.dedup();
    for k in items {
        let part = report.rows.iter().find(|r| r.items == k && r.payload == "part");
        let full = report.rows.iter().find(|r| r.items == k && r.payload == "full");
        let ratings = part.or(full).map(|r| r.ratings).unwrap_or(0);
        let reference = REFERENCE_TIMINGS.iter().find(|r| r.0 == k);
        let fmt_s = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        let fmt_b = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{k},{ratings},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_s(part.map(|r| r.seconds_per_iteration)),
            fmt_s(full.map(|r| r.seconds_per_iteration)),
            fmt_s(part.map(|r| r.client_seconds)),
            fmt_s(part.map(|r| r.client_seconds_max)),
            fmt_s(part.map(|r| r.server_seconds)),
            fmt_b(part.map(|r| r.bytes_per_iteration)),
            fmt_s(full.map(|r| r.client_seconds)),
            fmt_s(full.map(|r| r.client_seconds_max)),
            fmt_s(full.map(|r| r.server_seconds)),
            fmt_b(full.map(|r| r.bytes_per_iteration)),
            fmt_s(reference.map(|r| r.2)),
            fmt_s(reference.map(|r| r.3)),
        ));
    }
    out
}

pub fn run(args: &BenchArgs) -> anyhow::Result<()> {
    let seed = resolve_seed(args.seed)?;
    let items = parse_items_list(&args.items)?;
    let (data, label): (LoadedRatings<Scalar>, String) = match &args.data {
        Some(path) => (
            parse_ratings(path).with_context(|| format!("reading {}", path.display()))?,
            path.display().to_string(),
        ),
        None => {
            eprintln!(
                "note: no --data given; benchmarking a synthetic dataset with the \
                 ml-latest-small popularity curve"
            );
            (synth_movielens_like(seed)?, "synthetic-movielens".into())
        }
    };
    let payloads: &[PayloadMode] = match args.payload {
        PayloadBothArg::Full => &[PayloadMode::FullText],
        PayloadBothArg::Part => &[PayloadMode::PartText],
        PayloadBothArg::Both => &[PayloadMode::PartText, PayloadMode::FullText],
    };
    let report = run_sweep(
        &data,
        &label,
        &items,
        payloads,
        args.key_bits,
        args.dim,
        args.exponent,
        seed,
        args.max_seconds,
    )?;

    let json = serde_json::to_string_pretty(&report)?;
    match &args.out_json {
        Some(path) => std::fs::write(path, json.as_bytes())
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    if let Some(path) = &args.out_csv {
        std::fs::write(path, to_csv(&report).as_bytes())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
