//! Wire format: length-prefixed frames carrying JSON message envelopes.
//!
//! A frame is a 4-byte big-endian unsigned length followed by that many
//! bytes of UTF-8 JSON: an object with fields `type`, `round`, `sender`,
//! and `body`. Ciphertexts travel as lowercase hex strings (zero-padded to
//! the key's ciphertext width), exponents as decimal integers, and plaintext
//! reals as shortest round-trip decimal strings.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use fedmf_core::{PayloadMode, ProfileMatrix, Scalar};

use crate::error::{ProtocolError, Result};

/// Sender id the server uses in message envelopes.
pub const SERVER_SENDER: u64 = u64::MAX;

/// Frames larger than this are rejected as malformed.
pub const MAX_FRAME_LEN: u64 = 1 << 30;

/// One protocol message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub round: u32,
    pub sender: u64,
    #[serde(flatten)]
    pub body: Body,
}

/// Message payloads, tagged with the protocol's type names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "body")]
pub enum Body {
    #[serde(rename = "PUBKEY")]
    PubKey { key_bits: u32, n: String },
    #[serde(rename = "SECKEY")]
    SecKey { p: String, q: String },
    #[serde(rename = "PROFILES")]
    Profiles(ProfilesBody),
    #[serde(rename = "GRADIENT")]
    Gradient(GradientBody),
    #[serde(rename = "DONE")]
    Done { profiles: ProfilesBody },
}

impl Body {
    pub fn tag(&self) -> &'static str {
        match self {
            Body::PubKey { .. } => "PUBKEY",
            Body::SecKey { .. } => "SECKEY",
            Body::Profiles(_) => "PROFILES",
            Body::Gradient(_) => "GRADIENT",
            Body::Done { .. } => "DONE",
        }
    }
}

/// Item profiles in transit: plaintext decimal strings or ciphertext hex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "lowercase")]
pub enum ProfilesBody {
    Plain { rows: Vec<Vec<String>> },
    Encrypted { exponent: i64, rows: Vec<Vec<String>> },
}

/// Payload shape tag on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeTag {
    Full,
    Part,
}

impl From<PayloadMode> for ShapeTag {
    fn from(mode: PayloadMode) -> Self {
        match mode {
            PayloadMode::FullText => ShapeTag::Full,
            PayloadMode::PartText => ShapeTag::Part,
        }
    }
}

impl From<ShapeTag> for PayloadMode {
    fn from(tag: ShapeTag) -> Self {
        match tag {
            ShapeTag::Full => PayloadMode::FullText,
            ShapeTag::Part => PayloadMode::PartText,
        }
    }
}

/// One user's gradient upload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "lowercase")]
pub enum GradientBody {
    Plain {
        shape: ShapeTag,
        entries: Vec<(u32, Vec<String>)>,
    },
    Encrypted {
        shape: ShapeTag,
        exponent: i64,
        entries: Vec<(u32, Vec<String>)>,
    },
}

/// Shortest round-trip decimal rendering of a real.
pub fn real_to_string(x: Scalar) -> String {
    format!("{x}")
}

pub fn real_from_string(s: &str) -> Result<Scalar> {
    s.parse::<Scalar>()
        .map_err(|_| ProtocolError::BadReal(s.chars().take(32).collect()))
}

/// Profile matrix -> rows of decimal strings.
pub fn profile_to_rows(profiles: &ProfileMatrix<Scalar>) -> Vec<Vec<String>> {
    profiles
        .iter_rows()
        .map(|row| row.iter().map(|&x| real_to_string(x)).collect())
        .collect()
}

/// Rows of decimal strings -> profile matrix (shape-checked).
pub fn rows_to_profile(rows: &[Vec<String>], dim: usize) -> Result<ProfileMatrix<Scalar>> {
    let mut values = Vec::with_capacity(rows.len() * dim);
    for row in rows {
        if row.len() != dim {
            return Err(ProtocolError::Wire(format!(
                "profile row has {} cells, expected {dim}",
                row.len()
            )));
        }
        for cell in row {
            values.push(real_from_string(cell)?);
        }
    }
    ProfileMatrix::from_vec(rows.len(), dim, values).map_err(ProtocolError::Core)
}

/// Serializes a message into a complete frame (length prefix included).
pub fn encode_frame(msg: &Message) -> Vec<u8> {
    let json = serde_json::to_vec(msg).expect("message serializes");
    let mut frame = Vec::with_capacity(4 + json.len());
    frame.extend_from_slice(&(json.len() as u32).to_be_bytes());
    frame.extend_from_slice(&json);
    frame
}

/// Parses one complete frame. The buffer must contain exactly one frame.
pub fn decode_frame(frame: &[u8]) -> Result<Message> {
    if frame.len() < 4 {
        return Err(ProtocolError::Wire("frame shorter than its length prefix".into()));
    }
    let len = u32::from_be_bytes([frame[0], frame[1], frame[2], frame[3]]) as usize;
    let body = &frame[4..];
    if body.len() != len {
        return Err(ProtocolError::Wire(format!(
            "frame length prefix says {len} bytes, found {}",
            body.len()
        )));
    }
    serde_json::from_slice(body).map_err(|e| ProtocolError::Wire(e.to_string()))
}

/// Writes one frame to a byte sink.
pub fn write_frame(w: &mut impl Write, frame: &[u8]) -> Result<()> {
    w.write_all(frame)?;
    w.flush()?;
    Ok(())
}

/// Reads one complete frame (prefix included) from a byte source.
pub fn read_frame(r: &mut impl Read) -> Result<Vec<u8>> {
    let mut prefix = [0u8; 4];
    r.read_exact(&mut prefix)?;
    let len = u32::from_be_bytes(prefix) as u64;
    if len > MAX_FRAME_LEN {
        return Err(ProtocolError::FrameTooLarge {
            len,
            max: MAX_FRAME_LEN,
        });
    }
    let mut frame = vec![0u8; 4 + len as usize];
    frame[..4].copy_from_slice(&prefix);
    r.read_exact(&mut frame[4..])?;
    Ok(frame)
}
