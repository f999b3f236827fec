//! Round-by-round record of a plaintext distributed run.
//!
//! This is exactly what an honest-but-curious server observes: the item
//! profiles it served and every gradient upload. The inversion attack
//! consumes it.

use crate::config::{PayloadMode, PayloadRule};
use crate::error::{Error, Result};
use crate::gradient::{server_apply, GradientPayload};
use crate::profile::ProfileMatrix;
use crate::ratings::RatingTable;
use crate::real::Real;

/// One recorded round: the profiles before any of the round's uploads, plus
/// the uploads in application order.
#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptRound<R> {
    pub v_before: ProfileMatrix<R>,
    pub payloads: Vec<GradientPayload<R>>,
}

/// Ordered log of rounds plus the configuration echo the attack needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript<R> {
    pub n_users: usize,
    pub n_items: usize,
    pub dim: usize,
    pub learning_rate: R,
    pub lambda_u: R,
    pub mu_v: R,
    pub payload_mode: PayloadMode,
    pub rule: PayloadRule,
    pub rounds: Vec<TranscriptRound<R>>,
    /// Optionally embedded ground-truth ratings, for error reporting.
    pub ground_truth: Option<RatingTable<R>>,
}

impl<R: Real> Transcript<R> {
    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    fn round(&self, t: usize) -> Result<&TranscriptRound<R>> {
        self.rounds.get(t).ok_or(Error::RoundOutOfRange {
            round: t,
            rounds: self.rounds.len(),
        })
    }

    /// The payload user `user` uploaded in round `t`.
    pub fn payload(&self, t: usize, user: usize) -> Result<&GradientPayload<R>> {
        self.round(t)?
            .payloads
            .iter()
            .find(|p| p.user_id == user)
            .ok_or(Error::UserOutOfRange {
                user,
                n_users: self.n_users,
            })
    }

    /// Profiles before any upload of round `t`.
    pub fn v_before_round(&self, t: usize) -> Result<&ProfileMatrix<R>> {
        Ok(&self.round(t)?.v_before)
    }

    /// Profiles after every upload of round `t` has been applied.
    pub fn v_after_round(&self, t: usize) -> Result<ProfileMatrix<R>> {
        let round = self.round(t)?;
        let mut v = round.v_before.clone();
        for payload in &round.payloads {
            server_apply(&mut v, payload)?;
        }
        Ok(v)
    }

    /// The exact profiles user `user` downloaded in round `t`: the round's
    /// starting snapshot with the uploads of earlier users already applied
    /// (uploads are applied one by one, in user order).
    pub fn v_seen(&self, t: usize, user: usize) -> Result<ProfileMatrix<R>> {
        let round = self.round(t)?;
        let mut v = round.v_before.clone();
        for payload in &round.payloads {
            if payload.user_id >= user {
                break;
            }
            server_apply(&mut v, payload)?;
        }
        Ok(v)
    }
}
