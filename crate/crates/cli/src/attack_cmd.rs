//! `fedmf attack`: reconstruct one user's ratings from a recorded plaintext
//! transcript. I/O and precondition problems exit nonzero; a failed
//! reconstruction (no usable root) reports its diagnostics and exits zero.

use anyhow::Context;
use serde::Serialize;

use fedmf_attack::attack;
use fedmf_protocol::read_transcript;
use fedmf_protocol::wire::real_to_string;

use crate::args::{parse_range, AttackArgs};

#[derive(Serialize)]
struct ItemReport {
    item: usize,
    estimate: String,
    zero_gradient: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    abs_error: Option<String>,
}

#[derive(Serialize)]
struct ErrorStats {
    items_with_truth: usize,
    max_abs_error: String,
    mean_abs_error: String,
}

#[derive(Serialize)]
struct AttackReport {
    user: usize,
    round: usize,
    failed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    root: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    root_residual: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    payload_check_rel_err: Option<String>,
    candidates_tried: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    recovered_u: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    items: Vec<ItemReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_stats: Option<ErrorStats>,
}

pub fn run(args: &AttackArgs) -> anyhow::Result<()> {
    let range = parse_range(&args.rating_range)?;
    let transcript = read_transcript(&args.transcript)
        .with_context(|| format!("reading {}", args.transcript.display()))?;

    let report = match attack(&transcript, args.user, args.round, range) {
        Ok(recovered) => {
            let items: Vec<ItemReport> = recovered
                .items
                .iter()
                .map(|item| ItemReport {
                    item: item.item,
                    estimate: real_to_string(item.estimate),
                    zero_gradient: item.zero_gradient,
                    truth: item.truth.map(real_to_string),
                    abs_error: item.abs_error.map(real_to_string),
                })
                .collect();
            let errors: Vec<f64> = recovered.items.iter().filter_map(|i| i.abs_error).collect();
            let error_stats = (!errors.is_empty()).then(|| ErrorStats {
                items_with_truth: errors.len(),
                max_abs_error: real_to_string(errors.iter().cloned().fold(0.0, f64::max)),
                mean_abs_error: real_to_string(errors.iter().sum::<f64>() / errors.len() as f64),
            });
            AttackReport {
                user: recovered.user,
                round: recovered.round,
                failed: false,
                failure: None,
                root: Some(real_to_string(recovered.root)),
                root_residual: Some(real_to_string(recovered.root_residual)),
                payload_check_rel_err: Some(real_to_string(recovered.payload_check_rel_err)),
                candidates_tried: recovered.candidates_tried,
                recovered_u: recovered.recovered_u.iter().map(|&x| real_to_string(x)).collect(),
                items,
                error_stats,
            }
        }
        // A bracketing failure is a negative result, not a usage error.
        Err(e) if e.is_bracketing_failure() => AttackReport {
            user: args.user,
            round: args.round,
            failed: true,
            failure: Some(e.to_string()),
            root: None,
            root_residual: None,
            payload_check_rel_err: None,
            candidates_tried: 0,
            recovered_u: Vec::new(),
            items: Vec::new(),
            error_stats: None,
        },
        // Everything else (missing rounds, regularized transcripts, bad
        // files) is a usage problem.
        Err(e) => return Err(e.into()),
    };

    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => std::fs::write(path, json.as_bytes())
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}
