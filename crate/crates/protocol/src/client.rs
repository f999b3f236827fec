//! Client role: downloads profiles, decrypts what it needs, runs the local
//! update, and uploads the (optionally encrypted) gradient payload.
//!
//! Clients hold the secret key, so both decryption and encryption run on the
//! CRT fast path. A client only decrypts the rows of its own rated items for
//! the update itself; full-profile decryption happens solely in the
//! evaluation tap (`record_seen`) and the final download.

use fedmf_core::{
    gradient::{local_update, residual_local_update, GradientPayload},
    profile::ProfileMatrix,
    seed::{derive_seed, user_init_seed, STREAM_CLIENT_ENC},
    PayloadRule, Scalar, TrainConfig,
};
use fedmf_paillier::{
    decode, encode, encrypt_encoded_crt, Ciphertext, PaillierPublicKey, PaillierSecretKey,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{ProtocolError, Result};
use crate::run::Mode;
use crate::wire::{
    real_to_string, rows_to_profile, Body, GradientBody, Message, ProfilesBody, ShapeTag,
};

/// Client-side protocol state, including the evaluation recordings the
/// harness collects after a run.
pub struct ClientState {
    pub user_id: usize,
    pub mode: Mode,
    config: TrainConfig<Scalar>,
    payload_mode: fedmf_core::PayloadMode,
    rule: PayloadRule,
    exponent: i64,
    ratings: Vec<(usize, Scalar)>,
    u: Vec<Scalar>,
    pk: Option<PaillierPublicKey>,
    sk: Option<PaillierSecretKey>,
    enc_rng: ChaCha20Rng,
    expected_round: u32,
    /// `u` before round 0 and after each completed round.
    pub u_history: Vec<Vec<Scalar>>,
    /// Downloaded profiles per round (evaluation tap, opt-in).
    pub seen_profiles: Vec<ProfileMatrix<Scalar>>,
    /// Final profiles from the DONE broadcast (key-holder/evaluation).
    pub final_profiles: Option<ProfileMatrix<Scalar>>,
    record_seen: bool,
    record_final: bool,
    /// Compute time of the last round: decryption, the local update, and
    /// encryption. Parsing and serialization count as communication.
    pub last_compute_seconds: f64,
}

impl ClientState {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        user_id: usize,
        ratings: Vec<(usize, Scalar)>,
        config: TrainConfig<Scalar>,
        mode: Mode,
        payload_mode: fedmf_core::PayloadMode,
        rule: PayloadRule,
        exponent: i64,
        record_seen: bool,
        record_final: bool,
    ) -> Self {
        let u = ProfileMatrix::<Scalar>::seeded_uniform(
            1,
            config.dim,
            config.init_scale,
            user_init_seed(config.seed, user_id),
        )
        .row(0)
        .to_vec();
        let enc_rng = ChaCha20Rng::seed_from_u64(derive_seed(
            config.seed,
            STREAM_CLIENT_ENC + user_id as u64,
        ));
        Self {
            user_id,
            mode,
            payload_mode,
            rule,
            exponent,
            ratings,
            u_history: vec![u.clone()],
            u,
            pk: None,
            sk: None,
            enc_rng,
            expected_round: 0,
            seen_profiles: Vec::new(),
            final_profiles: None,
            record_seen,
            record_final,
            last_compute_seconds: 0.0,
            config,
        }
    }

    pub fn install_keys(&mut self, pk: PaillierPublicKey, sk: PaillierSecretKey) {
        self.pk = Some(pk);
        self.sk = Some(sk);
    }

    pub fn profile(&self) -> &[Scalar] {
        &self.u
    }

    fn decrypt_rows(
        &self,
        rows: &[Vec<String>],
        exponent: i64,
        items: &mut ProfileMatrix<Scalar>,
        which: &[usize],
    ) -> Result<()> {
        let pk = self.pk.as_ref().ok_or(ProtocolError::MissingKey("public key"))?;
        let sk = self.sk.as_ref().ok_or(ProtocolError::MissingKey("secret key"))?;
        for &item in which {
            let row = rows.get(item).ok_or_else(|| {
                ProtocolError::Wire(format!("profile grid missing row {item}"))
            })?;
            if row.len() != items.dim() {
                return Err(ProtocolError::Wire(format!(
                    "profile row has {} cells, expected {}",
                    row.len(),
                    items.dim()
                )));
            }
            for (k, hex) in row.iter().enumerate() {
                let cipher = Ciphertext::from_hex(hex, exponent, pk)?;
                let encoded = fedmf_paillier::decrypt_encoded(sk, &cipher)?;
                items.row_mut(item)[k] = decode(&encoded, pk)?;
            }
        }
        Ok(())
    }

    fn parse_profiles(&self, body: &ProfilesBody, n_items: usize) -> Result<ProfileMatrix<Scalar>> {
        match (self.mode, body) {
            (Mode::Plaintext, ProfilesBody::Plain { rows }) => {
                if rows.len() != n_items {
                    return Err(ProtocolError::Wire(format!(
                        "profile grid has {} rows, expected {n_items}",
                        rows.len()
                    )));
                }
                rows_to_profile(rows, self.config.dim)
            }
            (Mode::Encrypted, ProfilesBody::Encrypted { exponent, rows }) => {
                if rows.len() != n_items {
                    return Err(ProtocolError::Wire(format!(
                        "profile grid has {} rows, expected {n_items}",
                        rows.len()
                    )));
                }
                let mut items = ProfileMatrix::zeros(n_items, self.config.dim);
                let all: Vec<usize> = (0..n_items).collect();
                self.decrypt_rows(rows, *exponent, &mut items, &all)?;
                Ok(items)
            }
            _ => Err(ProtocolError::ModeMismatch),
        }
    }

    /// Handles one PROFILES message: local update plus the gradient reply.
    pub fn round_reply(&mut self, msg: &Message, n_items: usize) -> Result<Message> {
        if msg.round != self.expected_round {
            return Err(ProtocolError::RoundMismatch {
                expected: self.expected_round,
                got: msg.round,
            });
        }
        let body = match &msg.body {
            Body::Profiles(p) => p,
            other => {
                return Err(ProtocolError::UnexpectedMessage {
                    expected: "PROFILES",
                    got: other.tag(),
                })
            }
        };

        let reply_body = match (self.mode, body) {
            (Mode::Plaintext, ProfilesBody::Plain { rows }) => {
                if rows.len() != n_items {
                    return Err(ProtocolError::Wire(format!(
                        "profile grid has {} rows, expected {n_items}",
                        rows.len()
                    )));
                }
                let items = rows_to_profile(rows, self.config.dim)?;
                let timer = std::time::Instant::now();
                let payload = self.local_step(&items)?;
                self.last_compute_seconds = timer.elapsed().as_secs_f64();
                Body::Gradient(GradientBody::Plain {
                    shape: ShapeTag::from(self.payload_mode),
                    entries: payload
                        .entries
                        .iter()
                        .map(|(item, g)| {
                            (*item as u32, g.iter().map(|&x| real_to_string(x)).collect())
                        })
                        .collect(),
                })
            }
            (Mode::Encrypted, ProfilesBody::Encrypted { exponent, rows }) => {
                if rows.len() != n_items {
                    return Err(ProtocolError::Wire(format!(
                        "profile grid has {} rows, expected {n_items}",
                        rows.len()
                    )));
                }
                // Only the rated rows are needed for the update.
                let mut items = ProfileMatrix::zeros(n_items, self.config.dim);
                let rated: Vec<usize> = self.ratings.iter().map(|&(item, _)| item).collect();
                let timer = std::time::Instant::now();
                self.decrypt_rows(rows, *exponent, &mut items, &rated)?;
                let payload = self.local_step(&items)?;
                let pk = self.pk.as_ref().ok_or(ProtocolError::MissingKey("public key"))?;
                let sk = self.sk.as_ref().ok_or(ProtocolError::MissingKey("secret key"))?;
                let mut ciphers = Vec::with_capacity(payload.entries.len());
                for (item, g) in &payload.entries {
                    let mut cells = Vec::with_capacity(g.len());
                    for &x in g {
                        let encoded = encode(x, self.exponent, pk)?;
                        cells.push(encrypt_encoded_crt(sk, &encoded, &mut self.enc_rng)?);
                    }
                    ciphers.push((*item as u32, cells));
                }
                self.last_compute_seconds = timer.elapsed().as_secs_f64();
                let entries = ciphers
                    .into_iter()
                    .map(|(item, cells)| {
                        (item, cells.iter().map(|c| c.to_hex(pk)).collect())
                    })
                    .collect();
                Body::Gradient(GradientBody::Encrypted {
                    shape: ShapeTag::from(self.payload_mode),
                    exponent: self.exponent,
                    entries,
                })
            }
            _ => return Err(ProtocolError::ModeMismatch),
        };

        self.u_history.push(self.u.clone());
        self.expected_round += 1;
        Ok(Message {
            round: msg.round,
            sender: self.user_id as u64,
            body: reply_body,
        })
    }

    fn local_step(&mut self, items: &ProfileMatrix<Scalar>) -> Result<GradientPayload<Scalar>> {
        let (u_new, payload) = match self.rule {
            PayloadRule::ScaledGradient => local_update(
                &self.u,
                items,
                &self.ratings,
                &self.config,
                self.payload_mode,
                self.user_id,
            )?,
            PayloadRule::RawResidual => residual_local_update(
                &self.u,
                items,
                &self.ratings,
                self.payload_mode,
                self.user_id,
            )?,
        };
        self.u = u_new;
        Ok(payload)
    }

    /// Evaluation tap: decrypt/parse the full downloaded grid and remember
    /// it. Runs outside the timed section.
    pub fn record_seen(&mut self, msg: &Message, n_items: usize) -> Result<()> {
        if !self.record_seen {
            return Ok(());
        }
        if let Body::Profiles(body) = &msg.body {
            let items = self.parse_profiles(body, n_items)?;
            self.seen_profiles.push(items);
        }
        Ok(())
    }

    /// Handles the DONE broadcast carrying the final profiles.
    pub fn finish(&mut self, msg: &Message, n_items: usize) -> Result<()> {
        let body = match &msg.body {
            Body::Done { profiles } => profiles,
            other => {
                return Err(ProtocolError::UnexpectedMessage {
                    expected: "DONE",
                    got: other.tag(),
                })
            }
        };
        if self.record_final || self.record_seen {
            self.final_profiles = Some(self.parse_profiles(body, n_items)?);
        }
        Ok(())
    }
}
