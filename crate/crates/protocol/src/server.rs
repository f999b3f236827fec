//! Server role: holds the item profiles (plaintext or ciphertext), serves
//! them for download, and applies gradient uploads. In encrypted mode the
//! state never contains the secret key or any plaintext profile value after
//! initialization; uploads are applied as
//! `C_V <- add_cipher(C_V, mul_plain(C_G, n - 1))`.

use fedmf_core::{
    gradient::{server_apply, GradientPayload},
    profile::ProfileMatrix,
    seed::{derive_seed, item_init_seed, STREAM_SERVER_ENC},
    Scalar,
};
use fedmf_paillier::{encode, encrypt_encoded, Ciphertext, Integer, PaillierPublicKey};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{ProtocolError, Result};
use crate::run::Mode;
use crate::wire::{
    profile_to_rows, real_from_string, real_to_string, Body, GradientBody, Message, ProfilesBody,
    ShapeTag, SERVER_SENDER,
};

/// Ciphertext grid of item profiles; all cells share one exponent.
#[derive(Debug, Clone)]
pub struct EncryptedItemProfiles {
    pub rows: Vec<Vec<Ciphertext>>,
    pub exponent: i64,
}

/// What the server holds for the item profiles.
pub enum ServerProfiles {
    Plain(ProfileMatrix<Scalar>),
    Encrypted(EncryptedItemProfiles),
}

/// Server-side protocol state.
pub struct ServerState {
    pub mode: Mode,
    pub n_items: usize,
    pub dim: usize,
    pub profiles: ServerProfiles,
    pub pk: Option<PaillierPublicKey>,
    /// Cached `n - 1`, the homomorphic negation multiplier.
    neg_one: Option<Integer>,
    pub round: u32,
}

/// Initializes the item profiles (seeded, shared with the trainers) and, in
/// encrypted mode, encrypts them cell by cell under the public key. The
/// plaintext matrix is dropped immediately after encryption.
pub fn server_init(
    mode: Mode,
    n_items: usize,
    dim: usize,
    init_scale: Scalar,
    seed: u64,
    exponent: i64,
    pk: Option<PaillierPublicKey>,
) -> Result<ServerState> {
    let plain = ProfileMatrix::seeded_uniform(n_items, dim, init_scale, item_init_seed(seed));
    let (profiles, neg_one) = match mode {
        Mode::Plaintext => (ServerProfiles::Plain(plain), None),
        Mode::Encrypted => {
            let pk = pk.as_ref().ok_or(ProtocolError::MissingKey("public key"))?;
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, STREAM_SERVER_ENC));
            let mut rows = Vec::with_capacity(n_items);
            for row in plain.iter_rows() {
                let mut cells = Vec::with_capacity(dim);
                for &value in row {
                    let encoded = encode(value, exponent, pk)?;
                    cells.push(encrypt_encoded(pk, &encoded, &mut rng)?);
                }
                rows.push(cells);
            }
            (
                ServerProfiles::Encrypted(EncryptedItemProfiles { rows, exponent }),
                Some(Integer::from(pk.n() - 1)),
            )
        }
    };
    Ok(ServerState {
        mode,
        n_items,
        dim,
        profiles,
        pk,
        neg_one,
        round: 0,
    })
}

/// Information extracted while applying one upload.
pub struct Applied {
    /// The parsed payload (plaintext mode only; feeds transcript recording).
    pub payload: Option<GradientPayload<Scalar>>,
    /// Largest absolute payload component (plaintext mode only; drives the
    /// stop rule, which the server cannot evaluate over ciphertext).
    pub inf_norm: Option<Scalar>,
    /// Time spent in the update computation itself (homomorphic negate-add
    /// per cell, or the plaintext subtraction); excludes message parsing and
    /// serialization, which count as communication overhead.
    pub update_seconds: f64,
}

impl ServerState {
    fn profiles_body(&self) -> ProfilesBody {
        match &self.profiles {
            ServerProfiles::Plain(v) => ProfilesBody::Plain {
                rows: profile_to_rows(v),
            },
            ServerProfiles::Encrypted(grid) => {
                let pk = self.pk.as_ref().expect("encrypted state has a key");
                ProfilesBody::Encrypted {
                    exponent: grid.exponent,
                    rows: grid
                        .rows
                        .iter()
                        .map(|row| row.iter().map(|c| c.to_hex(pk)).collect())
                        .collect(),
                }
            }
        }
    }

    /// The download message for the current round.
    pub fn profiles_message(&self, round: u32) -> Message {
        Message {
            round,
            sender: SERVER_SENDER,
            body: Body::Profiles(self.profiles_body()),
        }
    }

    /// The final broadcast carrying the converged profiles.
    pub fn done_message(&self, round: u32) -> Message {
        Message {
            round,
            sender: SERVER_SENDER,
            body: Body::Done {
                profiles: self.profiles_body(),
            },
        }
    }

    /// Validates and applies one gradient upload.
    pub fn apply_gradient(
        &mut self,
        msg: &Message,
        expected_round: u32,
        expected_sender: u64,
    ) -> Result<Applied> {
        if msg.round != expected_round {
            return Err(ProtocolError::RoundMismatch {
                expected: expected_round,
                got: msg.round,
            });
        }
        if msg.sender != expected_sender {
            return Err(ProtocolError::SenderMismatch {
                expected: expected_sender,
                got: msg.sender,
            });
        }
        let body = match &msg.body {
            Body::Gradient(g) => g,
            other => {
                return Err(ProtocolError::UnexpectedMessage {
                    expected: "GRADIENT",
                    got: other.tag(),
                })
            }
        };
        match (&mut self.profiles, body) {
            (ServerProfiles::Plain(v), GradientBody::Plain { shape, entries }) => {
                let mut parsed = Vec::with_capacity(entries.len());
                for (item, cells) in entries {
                    let mut vector = Vec::with_capacity(cells.len());
                    for cell in cells {
                        vector.push(real_from_string(cell)?);
                    }
                    parsed.push((*item as usize, vector));
                }
                let payload = GradientPayload {
                    user_id: msg.sender as usize,
                    mode: (*shape).into(),
                    entries: parsed,
                };
                let timer = std::time::Instant::now();
                server_apply(v, &payload)?;
                let update_seconds = timer.elapsed().as_secs_f64();
                let norm = payload.inf_norm();
                Ok(Applied {
                    payload: Some(payload),
                    inf_norm: Some(norm),
                    update_seconds,
                })
            }
            (
                ServerProfiles::Encrypted(grid),
                GradientBody::Encrypted {
                    exponent,
                    entries,
                    ..
                },
            ) => {
                let pk = self.pk.as_ref().ok_or(ProtocolError::MissingKey("public key"))?;
                let neg_one = self.neg_one.as_ref().expect("encrypted state caches n - 1");
                let mut update_seconds = 0.0;
                for (item, cells) in entries {
                    let item = *item as usize;
                    if item >= grid.rows.len() {
                        return Err(ProtocolError::Core(fedmf_core::Error::ItemOutOfRange {
                            item,
                            n_items: grid.rows.len(),
                        }));
                    }
                    if cells.len() != self.dim {
                        return Err(ProtocolError::Wire(format!(
                            "gradient row has {} cells, expected {}",
                            cells.len(),
                            self.dim
                        )));
                    }
                    let mut row_ciphers = Vec::with_capacity(cells.len());
                    for cell in cells {
                        row_ciphers.push(Ciphertext::from_hex(cell, *exponent, pk)?);
                    }
                    let timer = std::time::Instant::now();
                    for (k, c_g) in row_ciphers.iter().enumerate() {
                        let negated = pk.mul_plain(c_g, neg_one)?;
                        grid.rows[item][k] = pk.add_cipher(&grid.rows[item][k], &negated)?;
                    }
                    update_seconds += timer.elapsed().as_secs_f64();
                }
                Ok(Applied {
                    payload: None,
                    inf_norm: None,
                    update_seconds,
                })
            }
            _ => Err(ProtocolError::ModeMismatch),
        }
    }

    /// Plaintext profiles (plaintext mode only; used for results and
    /// transcript snapshots).
    pub fn plain_profiles(&self) -> Option<&ProfileMatrix<Scalar>> {
        match &self.profiles {
            ServerProfiles::Plain(v) => Some(v),
            ServerProfiles::Encrypted(_) => None,
        }
    }
}

/// Helper shared with tests: renders one plaintext gradient payload as a
/// wire body.
pub fn plain_gradient_body(payload: &GradientPayload<Scalar>) -> GradientBody {
    GradientBody::Plain {
        shape: ShapeTag::from(payload.mode),
        entries: payload
            .entries
            .iter()
            .map(|(item, g)| (*item as u32, g.iter().map(|&x| real_to_string(x)).collect()))
            .collect(),
    }
}
