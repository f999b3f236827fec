//! Per-user gradients, payload shaping, and the server-side profile update.
//!
//! Each user effectively descends the local objective
//! `F_i(u_i, V) = sum_{j in M_i} (r_ij - <u_i, v_j>)^2 + lambda ||u_i||^2 + mu ||V||^2`,
//! so the regularizer on an item is contributed once per user who rated it.
//! That keeps every payload computable from data the user holds (own ratings
//! plus the downloaded profiles), which is what lets the encrypted mode apply
//! uploads by pure ciphertext addition.

use crate::config::PayloadMode;
use crate::error::{Error, Result};
use crate::math::dot;
use crate::profile::ProfileMatrix;
use crate::real::Real;

/// One user's per-item gradient vectors for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPayload<R> {
    pub user_id: usize,
    pub mode: PayloadMode,
    /// `(item_id, vector)` entries, sorted by item id. PartText carries
    /// exactly the rated items; FullText carries every item, zero vectors for
    /// unrated ones.
    pub entries: Vec<(usize, Vec<R>)>,
}

impl<R: Real> GradientPayload<R> {
    /// Largest absolute component across all entries.
    pub fn inf_norm(&self) -> R {
        self.entries
            .iter()
            .flat_map(|(_, v)| v.iter())
            .fold(R::zero(), |acc, &x| acc.max(x.abs()))
    }
}

fn two<R: Real>() -> R {
    R::one() + R::one()
}

fn check_items_in_range<R: Real>(
    items: &ProfileMatrix<R>,
    user_ratings: &[(usize, R)],
) -> Result<()> {
    for &(item, _) in user_ratings {
        if item >= items.rows() {
            return Err(Error::ItemOutOfRange {
                item,
                n_items: items.rows(),
            });
        }
    }
    Ok(())
}

/// Gradient of the local objective w.r.t. the user profile:
/// `-2 sum_{j in M_i} v_j (r_ij - <u_i, v_j>) + 2 lambda u_i`.
pub fn user_gradient<R: Real>(
    u: &[R],
    items: &ProfileMatrix<R>,
    user_ratings: &[(usize, R)],
    lambda_u: R,
) -> Result<Vec<R>> {
    if u.len() != items.dim() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: items.dim(),
        });
    }
    check_items_in_range(items, user_ratings)?;
    let mut acc = vec![R::zero(); u.len()];
    for &(item, rating) in user_ratings {
        let v = items.row(item);
        let resid = rating - dot(u, v);
        for (a, &vk) in acc.iter_mut().zip(v) {
            *a = *a + vk * resid;
        }
    }
    Ok(acc
        .iter()
        .zip(u)
        .map(|(&a, &uk)| -two::<R>() * a + two::<R>() * lambda_u * uk)
        .collect())
}

/// One user's raw item gradients, rated items only:
/// per item `j`, `-2 u_i (r_ij - <u_i, v_j>) + 2 mu v_j`.
///
/// Scaling by the learning rate and FullText zero-filling happen in
/// [`local_update`].
pub fn item_gradients<R: Real>(
    u: &[R],
    items: &ProfileMatrix<R>,
    user_ratings: &[(usize, R)],
    mu_v: R,
) -> Result<Vec<(usize, Vec<R>)>> {
    if u.len() != items.dim() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: items.dim(),
        });
    }
    check_items_in_range(items, user_ratings)?;
    let mut out = Vec::with_capacity(user_ratings.len());
    for &(item, rating) in user_ratings {
        let v = items.row(item);
        let resid = rating - dot(u, v);
        let grad = u
            .iter()
            .zip(v)
            .map(|(&uk, &vk)| -two::<R>() * uk * resid + two::<R>() * mu_v * vk)
            .collect();
        out.push((item, grad));
    }
    Ok(out)
}

/// One local SGD step: returns the stepped user profile and the upload,
/// shaped according to `mode` and scaled by the learning rate.
pub fn local_update<R: Real>(
    u: &[R],
    items: &ProfileMatrix<R>,
    user_ratings: &[(usize, R)],
    config: &crate::config::TrainConfig<R>,
    mode: PayloadMode,
    user_id: usize,
) -> Result<(Vec<R>, GradientPayload<R>)> {
    let lr = config.learning_rate;
    let grad_u = user_gradient(u, items, user_ratings, config.lambda_u)?;
    let u_new = u
        .iter()
        .zip(&grad_u)
        .map(|(&uk, &gk)| uk - lr * gk)
        .collect();
    let rated = item_gradients(u, items, user_ratings, config.mu_v)?;
    let scaled: Vec<(usize, Vec<R>)> = rated
        .into_iter()
        .map(|(item, g)| (item, g.into_iter().map(|x| lr * x).collect()))
        .collect();
    let entries = shape_entries(scaled, items.rows(), items.dim(), mode);
    Ok((
        u_new,
        GradientPayload {
            user_id,
            mode,
            entries,
        },
    ))
}

/// The attack-facing variant: the payload for each rated item is the bare
/// residual-weighted profile `u (r - <u, v>)`, and the user takes a unit step
/// `u <- u + 2 sum_j v_j (r_ij - <u_i, v_j>)`. Regularization must be zero.
pub fn residual_local_update<R: Real>(
    u: &[R],
    items: &ProfileMatrix<R>,
    user_ratings: &[(usize, R)],
    mode: PayloadMode,
    user_id: usize,
) -> Result<(Vec<R>, GradientPayload<R>)> {
    if u.len() != items.dim() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: items.dim(),
        });
    }
    check_items_in_range(items, user_ratings)?;
    let mut step = vec![R::zero(); u.len()];
    let mut rated = Vec::with_capacity(user_ratings.len());
    for &(item, rating) in user_ratings {
        let v = items.row(item);
        let resid = rating - dot(u, v);
        for (s, &vk) in step.iter_mut().zip(v) {
            *s = *s + vk * resid;
        }
        rated.push((item, u.iter().map(|&uk| uk * resid).collect()));
    }
    let u_new = u
        .iter()
        .zip(&step)
        .map(|(&uk, &sk)| uk + two::<R>() * sk)
        .collect();
    let entries = shape_entries(rated, items.rows(), items.dim(), mode);
    Ok((
        u_new,
        GradientPayload {
            user_id,
            mode,
            entries,
        },
    ))
}

fn shape_entries<R: Real>(
    rated: Vec<(usize, Vec<R>)>,
    n_items: usize,
    dim: usize,
    mode: PayloadMode,
) -> Vec<(usize, Vec<R>)> {
    match mode {
        PayloadMode::PartText => rated,
        PayloadMode::FullText => {
            let mut entries: Vec<(usize, Vec<R>)> = (0..n_items)
                .map(|item| (item, vec![R::zero(); dim]))
                .collect();
            for (item, g) in rated {
                entries[item].1 = g;
            }
            entries
        }
    }
}

/// Subtracts each payload vector from the matching item row; rows absent
/// from the payload are untouched.
pub fn server_apply<R: Real>(
    items: &mut ProfileMatrix<R>,
    payload: &GradientPayload<R>,
) -> Result<()> {
    for (item, g) in &payload.entries {
        if *item >= items.rows() {
            return Err(Error::ItemOutOfRange {
                item: *item,
                n_items: items.rows(),
            });
        }
        if g.len() != items.dim() {
            return Err(Error::DimensionMismatch {
                left: g.len(),
                right: items.dim(),
            });
        }
        for (v, &gk) in items.row_mut(*item).iter_mut().zip(g) {
            *v = *v - gk;
        }
    }
    Ok(())
}
