//! Transcript files: framed JSON records with the same length-prefixed
//! framing as the wire. A header record (configuration echo, optional
//! ground-truth ratings) is followed by one record per round holding the
//! profile snapshot as row-major decimal strings and the payload list.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use fedmf_core::{
    GradientPayload, PayloadMode, PayloadRule, ProfileMatrix, RatingTable, Scalar, Transcript,
    TranscriptRound,
};

use crate::error::{ProtocolError, Result};
use crate::wire::{real_from_string, real_to_string, ShapeTag};

pub const TRANSCRIPT_FORMAT: &str = "fedmf-transcript";
pub const TRANSCRIPT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct HeaderRecord {
    format: String,
    version: u32,
    mode: String,
    rule: String,
    payload_mode: ShapeTag,
    n_users: usize,
    n_items: usize,
    dim: usize,
    learning_rate: String,
    lambda: String,
    mu: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    ground_truth: Option<GroundTruthRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GroundTruthRecord {
    n_users: usize,
    n_items: usize,
    entries: Vec<(u32, u32, String)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RoundRecord {
    round: usize,
    /// Row-major decimal strings, `n_items * dim` cells.
    v_before: Vec<String>,
    payloads: Vec<PayloadRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PayloadRecord {
    user: u64,
    shape: ShapeTag,
    entries: Vec<(u32, Vec<String>)>,
}

fn rule_name(rule: PayloadRule) -> &'static str {
    match rule {
        PayloadRule::ScaledGradient => "scaled-gradient",
        PayloadRule::RawResidual => "raw-residual",
    }
}

fn rule_from_name(name: &str) -> Result<PayloadRule> {
    match name {
        "scaled-gradient" => Ok(PayloadRule::ScaledGradient),
        "raw-residual" => Ok(PayloadRule::RawResidual),
        other => Err(ProtocolError::BadTranscript(format!(
            "unknown payload rule {other:?}"
        ))),
    }
}

fn write_record<T: Serialize>(w: &mut impl Write, record: &T) -> Result<()> {
    let json = serde_json::to_vec(record).expect("record serializes");
    w.write_all(&(json.len() as u32).to_be_bytes())?;
    w.write_all(&json)?;
    Ok(())
}

fn read_record<T: for<'de> Deserialize<'de>>(r: &mut impl Read) -> Result<Option<T>> {
    let mut prefix = [0u8; 4];
    match r.read_exact(&mut prefix) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(prefix) as usize;
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    let record =
        serde_json::from_slice(&body).map_err(|e| ProtocolError::BadTranscript(e.to_string()))?;
    Ok(Some(record))
}

/// Writes a transcript (optionally with embedded ground truth) to disk.
pub fn write_transcript(path: impl AsRef<Path>, transcript: &Transcript<Scalar>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = HeaderRecord {
        format: TRANSCRIPT_FORMAT.into(),
        version: TRANSCRIPT_VERSION,
        mode: "plaintext".into(),
        rule: rule_name(transcript.rule).into(),
        payload_mode: ShapeTag::from(transcript.payload_mode),
        n_users: transcript.n_users,
        n_items: transcript.n_items,
        dim: transcript.dim,
        learning_rate: real_to_string(transcript.learning_rate),
        lambda: real_to_string(transcript.lambda_u),
        mu: real_to_string(transcript.mu_v),
        ground_truth: transcript.ground_truth.as_ref().map(|table| GroundTruthRecord {
            n_users: table.n_users(),
            n_items: table.n_items(),
            entries: table
                .iter()
                .map(|(u, i, r)| (u as u32, i as u32, real_to_string(r)))
                .collect(),
        }),
    };
    write_record(&mut w, &header)?;
    for (round, data) in transcript.rounds.iter().enumerate() {
        let record = RoundRecord {
            round,
            v_before: data
                .v_before
                .as_slice()
                .iter()
                .map(|&x| real_to_string(x))
                .collect(),
            payloads: data
                .payloads
                .iter()
                .map(|p| PayloadRecord {
                    user: p.user_id as u64,
                    shape: ShapeTag::from(p.mode),
                    entries: p
                        .entries
                        .iter()
                        .map(|(item, g)| {
                            (*item as u32, g.iter().map(|&x| real_to_string(x)).collect())
                        })
                        .collect(),
                })
                .collect(),
        };
        write_record(&mut w, &record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a transcript file back. Rejects files whose header declares any
/// mode but plaintext: encrypted runs have nothing an attack could read.
pub fn read_transcript(path: impl AsRef<Path>) -> Result<Transcript<Scalar>> {
    let mut r = BufReader::new(File::open(path)?);
    let header: HeaderRecord = read_record(&mut r)?
        .ok_or_else(|| ProtocolError::BadTranscript("empty file".into()))?;
    if header.format != TRANSCRIPT_FORMAT {
        return Err(ProtocolError::BadTranscript(format!(
            "unexpected format tag {:?}",
            header.format
        )));
    }
    if header.version != TRANSCRIPT_VERSION {
        return Err(ProtocolError::BadTranscript(format!(
            "unsupported version {}",
            header.version
        )));
    }
    if header.mode != "plaintext" {
        return Err(ProtocolError::TranscriptMode(header.mode));
    }
    let rule = rule_from_name(&header.rule)?;

    let ground_truth = match header.ground_truth {
        None => None,
        Some(record) => {
            let entries = record
                .entries
                .iter()
                .map(|(u, i, r)| Ok((*u as usize, *i as usize, real_from_string(r)?)))
                .collect::<Result<Vec<_>>>()?;
            Some(
                RatingTable::from_entries(record.n_users, record.n_items, entries)
                    .map_err(ProtocolError::Core)?,
            )
        }
    };

    let mut rounds = Vec::new();
    while let Some(record) = read_record::<RoundRecord>(&mut r)? {
        if record.round != rounds.len() {
            return Err(ProtocolError::BadTranscript(format!(
                "round {} out of order (expected {})",
                record.round,
                rounds.len()
            )));
        }
        let mut values = Vec::with_capacity(record.v_before.len());
        for cell in &record.v_before {
            values.push(real_from_string(cell)?);
        }
        let v_before = ProfileMatrix::from_vec(header.n_items, header.dim, values)
            .map_err(ProtocolError::Core)?;
        let mut payloads = Vec::with_capacity(record.payloads.len());
        for p in record.payloads {
            let mut entries = Vec::with_capacity(p.entries.len());
            for (item, cells) in p.entries {
                let mut g = Vec::with_capacity(cells.len());
                for cell in cells {
                    g.push(real_from_string(&cell)?);
                }
                entries.push((item as usize, g));
            }
            payloads.push(GradientPayload {
                user_id: p.user as usize,
                mode: PayloadMode::from(p.shape),
                entries,
            });
        }
        rounds.push(TranscriptRound { v_before, payloads });
    }

    Ok(Transcript {
        n_users: header.n_users,
        n_items: header.n_items,
        dim: header.dim,
        learning_rate: real_from_string(&header.learning_rate)?,
        lambda_u: real_from_string(&header.lambda)?,
        mu_v: real_from_string(&header.mu)?,
        payload_mode: PayloadMode::from(header.payload_mode),
        rule,
        rounds,
        ground_truth,
    })
}
