//! Reference trainers: a centralized oracle and the plaintext distributed
//! trainer it must match bit for bit.
//!
//! One iteration sweeps every user in ascending id order; each user computes
//! against the item profiles left by the previous user's upload, and the
//! server applies each upload immediately. The sweep stops at `max_iters` or
//! once the largest payload infinity-norm in a round drops below
//! `stop_threshold`.

use crate::config::{PayloadMode, PayloadRule, TrainConfig};
use crate::error::{Error, Result};
use crate::gradient::{local_update, residual_local_update, server_apply};
use crate::math::{dot, loss};
use crate::profile::ProfileMatrix;
use crate::ratings::RatingTable;
use crate::real::Real;
use crate::seed::{item_init_seed, user_init_seed};
use crate::transcript::{Transcript, TranscriptRound};

/// Converged profiles plus the per-round loss trace (entry 0 is the loss of
/// the initial profiles).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult<R> {
    pub users: ProfileMatrix<R>,
    pub items: ProfileMatrix<R>,
    pub loss_history: Vec<R>,
    pub rounds: usize,
}

/// Seeded initial profiles for a run: `(users, items)`.
///
/// The distributed trainer and the federation protocol draw from the same
/// derived seeds, so every execution mode starts from identical profiles.
pub fn init_profiles<R: Real>(
    n_users: usize,
    n_items: usize,
    config: &TrainConfig<R>,
) -> (ProfileMatrix<R>, ProfileMatrix<R>) {
    let items = ProfileMatrix::seeded_uniform(
        n_items,
        config.dim,
        config.init_scale,
        item_init_seed(config.seed),
    );
    let mut users = ProfileMatrix::zeros(n_users, config.dim);
    for u in 0..n_users {
        let row = ProfileMatrix::seeded_uniform(
            1,
            config.dim,
            config.init_scale,
            user_init_seed(config.seed, u),
        );
        users.row_mut(u).copy_from_slice(row.row(0));
    }
    (users, items)
}

fn check_finite<R: Real>(
    users: &ProfileMatrix<R>,
    items: &ProfileMatrix<R>,
    iteration: usize,
) -> Result<()> {
    if users.is_finite() && items.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged { iteration })
    }
}

/// Centralized oracle: the same per-user sweep as the distributed trainer,
/// written as plain in-place loops.
pub fn train_centralized<R: Real>(
    ratings: &RatingTable<R>,
    config: &TrainConfig<R>,
) -> Result<TrainResult<R>> {
    config.validate()?;
    if ratings.is_empty() {
        return Err(Error::EmptyRatings);
    }
    let (mut users, mut items) = init_profiles(ratings.n_users(), ratings.n_items(), config);
    let two = R::one() + R::one();
    let lr = config.learning_rate;
    let lambda = config.lambda_u;
    let mu = config.mu_v;
    let d = config.dim;

    let mut loss_history = vec![loss(&users, &items, ratings, lambda, mu)?];
    let mut rounds = 0;
    for t in 0..config.max_iters {
        let mut round_norm = R::zero();
        for user in 0..ratings.n_users() {
            let rated = ratings.user_ratings(user);
            let u: Vec<R> = users.row(user).to_vec();
            let mut acc = vec![R::zero(); d];
            let mut uploads: Vec<(usize, Vec<R>)> = Vec::with_capacity(rated.len());
            for &(item, rating) in rated {
                let v = items.row(item);
                let resid = rating - dot(&u, v);
                for (a, &vk) in acc.iter_mut().zip(v) {
                    *a = *a + vk * resid;
                }
                let scaled: Vec<R> = u
                    .iter()
                    .zip(v)
                    .map(|(&uk, &vk)| lr * (-two * uk * resid + two * mu * vk))
                    .collect();
                uploads.push((item, scaled));
            }
            for (k, (uk, &a)) in users.row_mut(user).iter_mut().zip(&acc).enumerate() {
                let g = -two * a + two * lambda * u[k];
                *uk = u[k] - lr * g;
            }
            for (item, scaled) in uploads {
                for &g in &scaled {
                    round_norm = round_norm.max(g.abs());
                }
                for (vk, &g) in items.row_mut(item).iter_mut().zip(&scaled) {
                    *vk = *vk - g;
                }
            }
        }
        check_finite(&users, &items, t)?;
        loss_history.push(loss(&users, &items, ratings, lambda, mu)?);
        rounds = t + 1;
        if round_norm < config.stop_threshold {
            break;
        }
    }
    Ok(TrainResult {
        users,
        items,
        loss_history,
        rounds,
    })
}

/// Plaintext distributed trainer: the same schedule as the oracle, but run
/// through the payload machinery, optionally recording a [`Transcript`].
pub fn train_distributed_plaintext<R: Real>(
    ratings: &RatingTable<R>,
    config: &TrainConfig<R>,
    mode: PayloadMode,
    rule: PayloadRule,
    record: bool,
) -> Result<(TrainResult<R>, Option<Transcript<R>>)> {
    config.validate()?;
    if ratings.is_empty() {
        return Err(Error::EmptyRatings);
    }
    if rule == PayloadRule::RawResidual && (config.lambda_u != R::zero() || config.mu_v != R::zero())
    {
        return Err(Error::InvalidConfig(
            "the raw-residual payload rule requires lambda_u = mu_v = 0".into(),
        ));
    }
    let (mut users, mut items) = init_profiles(ratings.n_users(), ratings.n_items(), config);
    let mut loss_history = vec![loss(&users, &items, ratings, config.lambda_u, config.mu_v)?];
    let mut transcript_rounds = Vec::new();
    let mut rounds = 0;
    for t in 0..config.max_iters {
        let v_before = record.then(|| items.clone());
        let mut round_payloads = Vec::new();
        let mut round_norm = R::zero();
        for user in 0..ratings.n_users() {
            let rated = ratings.user_ratings(user);
            let u = users.row(user).to_vec();
            let (u_new, payload) = match rule {
                PayloadRule::ScaledGradient => {
                    local_update(&u, &items, rated, config, mode, user)?
                }
                PayloadRule::RawResidual => {
                    residual_local_update(&u, &items, rated, mode, user)?
                }
            };
            users.row_mut(user).copy_from_slice(&u_new);
            round_norm = round_norm.max(payload.inf_norm());
            server_apply(&mut items, &payload)?;
            if record {
                round_payloads.push(payload);
            }
        }
        check_finite(&users, &items, t)?;
        loss_history.push(loss(&users, &items, ratings, config.lambda_u, config.mu_v)?);
        if let Some(v_before) = v_before {
            transcript_rounds.push(TranscriptRound {
                v_before,
                payloads: round_payloads,
            });
        }
        rounds = t + 1;
        if round_norm < config.stop_threshold {
            break;
        }
    }
    let transcript = record.then(|| Transcript {
        n_users: ratings.n_users(),
        n_items: ratings.n_items(),
        dim: config.dim,
        learning_rate: config.learning_rate,
        lambda_u: config.lambda_u,
        mu_v: config.mu_v,
        payload_mode: mode,
        rule,
        rounds: transcript_rounds,
        ground_truth: None,
    });
    Ok((
        TrainResult {
            users,
            items,
            loss_history,
            rounds,
        },
        transcript,
    ))
}
