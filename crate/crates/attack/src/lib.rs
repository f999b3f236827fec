//! Rating reconstruction from two consecutive plaintext gradient uploads.
//!
//! Given the profiles a user downloaded in rounds `t` and `t+1` and the
//! gradients they uploaded in both, the user's latent vector satisfies a
//! scalar equation in its `k`-th entry. Solving that equation numerically,
//! expanding to the full vector through gradient ratios, and plugging into
//! the residual identity recovers every rating the user uploaded a nonzero
//! gradient for. The algebra requires zero regularization and treats the
//! upload as the bare residual-weighted profile; transcripts recorded with
//! the standard learning-rate-scaled rule are converted by a normalization
//! pre-pass (divide uploads by `-2 * lr`, carry `lr` into the step scale).
//!
//! All functions are pure over an immutable transcript; attacks on different
//! users are independent.

pub mod error;
pub mod solve;

use fedmf_core::{PayloadRule, ProfileMatrix, Real, Transcript};

pub use error::{AttackError, Result};
pub use solve::{bracketed_roots, newton, RootSearch};

/// Accepted roots must satisfy `|f(root)| < RESIDUAL_TOLERANCE`, measured
/// relative to the magnitude of the equation's terms.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// A normalized two-round view of one user's uploads: gradients in the
/// residual-product convention, plus the exact profiles the user saw.
#[derive(Debug, Clone)]
pub struct AttackInstance<R> {
    pub user: usize,
    pub round: usize,
    pub dim: usize,
    /// Step scale of the user update: `u' = u + 2 * step * sum_j v_j resid_j`.
    pub step: R,
    /// Normalized uploads at round t, rated items only, all-zero rows kept.
    pub g_t: Vec<(usize, Vec<R>)>,
    /// Normalized uploads at round t+1.
    pub g_t1: Vec<(usize, Vec<R>)>,
    /// Profiles downloaded at round t.
    pub v_t: ProfileMatrix<R>,
    /// Profiles downloaded at round t+1.
    pub v_t1: ProfileMatrix<R>,
}

/// The scalar summaries the equation is built from.
#[derive(Debug, Clone)]
pub struct AttackScratch<R> {
    /// `alpha_k = 2 * step * sum_j v_t[j][k] * g_t[j][k]` over rated items.
    pub alpha: Vec<R>,
    /// Probe items: rated in both rounds with fully nonzero round-t gradients.
    pub probe_items: Vec<usize>,
    /// `beta_j = sum_m (v_t1[j][m] - v_t[j][m]) * g_t[j][m]` per probe item.
    pub beta: Vec<R>,
    /// `gamma_j = sum_m alpha_m * v_t1[j][m] / g_t[j][m]` per probe item.
    pub gamma: Vec<R>,
    /// Reference coordinate: maximizes the smallest `|g_t[j][k]|` over probes.
    pub k_ref: usize,
}

/// One reconstructed rating.
#[derive(Debug, Clone)]
pub struct RecoveredItem<R> {
    pub item: usize,
    pub estimate: R,
    /// The gradient vanished, so the estimate is the inner product alone.
    pub zero_gradient: bool,
    pub truth: Option<R>,
    pub abs_error: Option<R>,
}

/// Full attack output for one user and round.
#[derive(Debug, Clone)]
pub struct RecoveredRatings<R> {
    pub user: usize,
    pub round: usize,
    pub root: R,
    pub root_residual: R,
    pub recovered_u: Vec<R>,
    pub items: Vec<RecoveredItem<R>>,
    pub candidates_tried: usize,
    /// Worst relative error when the recovered profile regenerates the
    /// observed uploads.
    pub payload_check_rel_err: R,
}

impl<R: Real> AttackInstance<R> {
    /// Normalizes rounds `t` and `t+1` of a transcript for one user.
    pub fn from_transcript(transcript: &Transcript<R>, user: usize, t: usize) -> Result<Self> {
        if t + 1 >= transcript.n_rounds() {
            return Err(AttackError::MissingRounds {
                round: t,
                rounds: transcript.n_rounds(),
            });
        }
        let grab = |round: usize| -> Result<Vec<(usize, Vec<R>)>> {
            let payload = transcript
                .payload(round, user)
                .map_err(|_| AttackError::UserMissing { user, round })?;
            Ok(payload.entries.clone())
        };
        let mut g_t = grab(t)?;
        let mut g_t1 = grab(t + 1)?;
        let step = match transcript.rule {
            PayloadRule::RawResidual => R::one(),
            PayloadRule::ScaledGradient => {
                if transcript.lambda_u != R::zero() || transcript.mu_v != R::zero() {
                    return Err(AttackError::RegularizedTranscript);
                }
                // upload = lr * (-2 u resid)  =>  divide by -2 lr
                let scale = -(R::one() + R::one()) * transcript.learning_rate;
                for (_, g) in g_t.iter_mut().chain(g_t1.iter_mut()) {
                    for x in g.iter_mut() {
                        *x = *x / scale;
                    }
                }
                transcript.learning_rate
            }
        };
        Ok(Self {
            user,
            round: t,
            dim: transcript.dim,
            step,
            g_t,
            g_t1,
            v_t: transcript.v_seen(t, user)?,
            v_t1: transcript.v_seen(t + 1, user)?,
        })
    }

    fn g_t_for(&self, item: usize) -> Option<&[R]> {
        self.g_t
            .iter()
            .find(|(i, _)| *i == item)
            .map(|(_, g)| g.as_slice())
    }

    fn g_t1_for(&self, item: usize) -> Option<&[R]> {
        self.g_t1
            .iter()
            .find(|(i, _)| *i == item)
            .map(|(_, g)| g.as_slice())
    }
}

/// Builds the scalar summaries for an instance.
pub fn compute_scalars<R: Real>(instance: &AttackInstance<R>) -> Result<AttackScratch<R>> {
    let d = instance.dim;
    let two = R::one() + R::one();

    let mut alpha = vec![R::zero(); d];
    for (item, g) in &instance.g_t {
        let v = instance.v_t.row(*item);
        for k in 0..d {
            alpha[k] = alpha[k] + v[k] * g[k];
        }
    }
    for a in alpha.iter_mut() {
        *a = two * instance.step * *a;
    }

    // Probe items need every round-t component nonzero (they appear in
    // gamma's denominators) and an upload in round t+1.
    let mut probe_items = Vec::new();
    for (item, g) in &instance.g_t {
        if g.iter().all(|x| *x != R::zero()) && instance.g_t1_for(*item).is_some() {
            probe_items.push(*item);
        }
    }
    if probe_items.is_empty() {
        return Err(AttackError::NoProbeItems {
            round: instance.round,
        });
    }

    let mut beta = Vec::with_capacity(probe_items.len());
    let mut gamma = Vec::with_capacity(probe_items.len());
    for &item in &probe_items {
        let g = instance.g_t_for(item).expect("probe item has a round-t upload");
        let vt = instance.v_t.row(item);
        let vt1 = instance.v_t1.row(item);
        let mut b = R::zero();
        let mut c = R::zero();
        for m in 0..d {
            b = b + (vt1[m] - vt[m]) * g[m];
            c = c + alpha[m] * vt1[m] / g[m];
        }
        beta.push(b);
        gamma.push(c);
    }

    // Reference coordinate: max over k of the smallest |g_t[j][k]|.
    let mut k_ref = 0;
    let mut best = R::neg_infinity();
    for k in 0..d {
        let worst = probe_items
            .iter()
            .map(|&item| instance.g_t_for(item).expect("probe item")[k].abs())
            .fold(R::infinity(), |a, b| a.min(b));
        if worst > best {
            best = worst;
            k_ref = k;
        }
    }

    Ok(AttackScratch {
        alpha,
        probe_items,
        beta,
        gamma,
        k_ref,
    })
}

fn equation_parts<R: Real>(alpha_k: R, beta_j: R, gamma_j: R, a: R, b: R, x: R) -> (R, R) {
    let t1 = a / x;
    let t2 = b / (x + alpha_k / x);
    let t3 = (x / a) * beta_j;
    let t4 = (a / x) * gamma_j;
    let value = t1 - t2 - t3 - t4;
    let scale = t1.abs() + t2.abs() + t3.abs() + t4.abs();
    (value, scale)
}

/// The scalar equation for one probe item: real roots `x` of
/// `f(x) = A/x - B/(x + alpha_k/x) - (x/A) beta - (A/x) gamma`
/// where `A = g_t[j][k]` and `B = g_t1[j][k]`. The true `u[k]` is a root.
/// Convergence is judged relative to the magnitude of the equation's terms,
/// which can be large when other users churn the profiles heavily.
pub fn solve_uik<R: Real>(
    alpha_k: R,
    beta_j: R,
    gamma_j: R,
    g_jk_t: R,
    g_jk_t1: R,
    search: &RootSearch,
) -> Vec<R> {
    let a = g_jk_t;
    let b = g_jk_t1;
    let f = move |x: R| equation_parts(alpha_k, beta_j, gamma_j, a, b, x).0;
    let df = move |x: R| {
        let w = x + alpha_k / x;
        -a / (x * x) + b * (R::one() - alpha_k / (x * x)) / (w * w) - beta_j / a
            + a * gamma_j / (x * x)
    };
    let scale = move |x: R| equation_parts(alpha_k, beta_j, gamma_j, a, b, x).1;
    solve::bracketed_roots_scaled(f, df, scale, search)
}

/// Expands a solved `u[k]` to the full vector through the gradient ratios
/// `u[m] = (g[j][m] / g[j][k]) * u[k]` of a reference item.
pub fn recover_user_vector<R: Real>(g_ref: &[R], k: usize, u_k: R) -> Result<Vec<R>> {
    if g_ref[k] == R::zero() {
        return Err(AttackError::ZeroReferenceGradient { k });
    }
    Ok(g_ref.iter().map(|&gm| (gm / g_ref[k]) * u_k).collect())
}

/// Recovers every uploaded rating: `r_j = g[j][k] / u[k] + <u, v_t[j]>`.
/// Items whose gradient vanished entirely fall back to the inner product.
pub fn recover_ratings<R: Real>(
    u: &[R],
    v_t: &ProfileMatrix<R>,
    g_t: &[(usize, Vec<R>)],
    k: usize,
) -> Vec<RecoveredItem<R>> {
    let mut out = Vec::with_capacity(g_t.len());
    for (item, g) in g_t {
        let v = v_t.row(*item);
        let inner = u
            .iter()
            .zip(v)
            .fold(R::zero(), |acc, (&a, &b)| acc + a * b);
        let (estimate, zero_gradient) = if g.iter().all(|x| *x == R::zero()) {
            (inner, true)
        } else {
            // Prefer the reference coordinate; fall back to the largest
            // component if it vanished there.
            let (gk, uk) = if g[k] != R::zero() && u[k] != R::zero() {
                (g[k], u[k])
            } else {
                let m = (0..g.len())
                    .max_by(|&i, &j| g[i].abs().partial_cmp(&g[j].abs()).unwrap())
                    .unwrap();
                (g[m], u[m])
            };
            (gk / uk + inner, false)
        };
        out.push(RecoveredItem {
            item: *item,
            estimate,
            zero_gradient,
            truth: None,
            abs_error: None,
        });
    }
    out
}

fn range_score<R: Real>(items: &[RecoveredItem<R>], lo: R, hi: R) -> (usize, R) {
    let mut in_range = 0;
    let mut distance = R::zero();
    for item in items {
        if item.zero_gradient {
            continue;
        }
        let x = item.estimate;
        if x >= lo && x <= hi {
            in_range += 1;
        } else if x < lo {
            distance = distance + (lo - x);
        } else {
            distance = distance + (x - hi);
        }
    }
    (in_range, distance)
}

fn payload_check<R: Real>(u: &[R], v_t: &ProfileMatrix<R>, g_t: &[(usize, Vec<R>)], k: usize) -> R {
    let mut worst = R::zero();
    for (item, g) in g_t {
        if g.iter().all(|x| *x == R::zero()) || u[k] == R::zero() || g[k] == R::zero() {
            continue;
        }
        let v = v_t.row(*item);
        let inner = u
            .iter()
            .zip(v)
            .fold(R::zero(), |acc, (&a, &b)| acc + a * b);
        let r_hat = g[k] / u[k] + inner;
        let resid = r_hat - inner;
        let norm = g.iter().fold(R::zero(), |acc, &x| acc + x * x).sqrt();
        let mut err = R::zero();
        for (m, &gm) in g.iter().enumerate() {
            let regen = u[m] * resid;
            err = err + (regen - gm) * (regen - gm);
        }
        worst = worst.max(err.sqrt() / norm.max(R::of(1e-300)));
    }
    worst
}

/// End-to-end reconstruction of one user's ratings from rounds `t` and
/// `t+1`, disambiguating the root's sign by how well the recovered ratings
/// fit `rating_range`.
pub fn attack<R: Real>(
    transcript: &Transcript<R>,
    user: usize,
    t: usize,
    rating_range: (R, R),
) -> Result<RecoveredRatings<R>> {
    attack_with(transcript, user, t, rating_range, &RootSearch::default())
}

pub fn attack_with<R: Real>(
    transcript: &Transcript<R>,
    user: usize,
    t: usize,
    rating_range: (R, R),
    search: &RootSearch,
) -> Result<RecoveredRatings<R>> {
    let instance = AttackInstance::from_transcript(transcript, user, t)?;
    let scratch = compute_scalars(&instance)?;
    let k = scratch.k_ref;

    // Collect candidate roots across the probe items.
    let mut candidates: Vec<R> = Vec::new();
    for (idx, &item) in scratch.probe_items.iter().enumerate() {
        let g_jk_t = instance.g_t_for(item).expect("probe item")[k];
        let g_jk_t1 = instance.g_t1_for(item).expect("probe item")[k];
        for root in solve_uik(
            scratch.alpha[k],
            scratch.beta[idx],
            scratch.gamma[idx],
            g_jk_t,
            g_jk_t1,
            search,
        ) {
            let dup = candidates
                .iter()
                .any(|&r| (r - root).abs() <= R::of(1e-8) * root.abs().max(R::of(1e-300)));
            if !dup {
                candidates.push(root);
            }
        }
    }
    if candidates.is_empty() {
        return Err(AttackError::NoRootBracketed {
            brackets: 0,
            items: scratch.probe_items.len(),
        });
    }

    // Reference item for the ratio expansion: largest |g_t[j][k]|.
    let ref_item = *scratch
        .probe_items
        .iter()
        .max_by(|&&a, &&b| {
            let ga = instance.g_t_for(a).expect("probe item")[k].abs();
            let gb = instance.g_t_for(b).expect("probe item")[k].abs();
            ga.partial_cmp(&gb).unwrap()
        })
        .expect("probe items nonempty");
    let g_ref = instance.g_t_for(ref_item).expect("probe item").to_vec();

    let residual_of = |x: R| -> R {
        // Worst scaled equation residual across probe items: a true root
        // satisfies every probe item's equation simultaneously.
        let mut worst = R::zero();
        for (idx, &item) in scratch.probe_items.iter().enumerate() {
            let a = instance.g_t_for(item).expect("probe item")[k];
            let b = instance.g_t1_for(item).expect("probe item")[k];
            let (value, scale) =
                equation_parts(scratch.alpha[k], scratch.beta[idx], scratch.gamma[idx], a, b, x);
            worst = worst.max(value.abs() / scale.max(R::one()));
        }
        worst
    };

    let tolerance = R::of(RESIDUAL_TOLERANCE);
    let (lo, hi) = rating_range;
    let mut best: Option<(usize, R, R, RecoveredRatings<R>)> = None;
    let candidates_tried = candidates.len();
    for &root in &candidates {
        let own_residual = residual_of(root);
        let u = recover_user_vector(&g_ref, k, root)?;
        let mut items = recover_ratings(&u, &instance.v_t, &instance.g_t, k);
        if let Some(truth) = &transcript.ground_truth {
            for item in items.iter_mut() {
                if let Some(r) = truth.get(user, item.item) {
                    item.truth = Some(r);
                    item.abs_error = Some((item.estimate - r).abs());
                }
            }
        }
        let (in_range, distance) = range_score(&items, lo, hi);
        let report = RecoveredRatings {
            user,
            round: t,
            root,
            root_residual: own_residual,
            payload_check_rel_err: payload_check(&u, &instance.v_t, &instance.g_t, k),
            recovered_u: u,
            items,
            candidates_tried,
        };
        let better = match &best {
            None => true,
            Some((best_in, best_dist, best_res, _)) => {
                in_range > *best_in
                    || (in_range == *best_in && distance < *best_dist)
                    || (in_range == *best_in && distance == *best_dist && own_residual < *best_res)
            }
        };
        if better {
            best = Some((in_range, distance, own_residual, report));
        }
    }

    let (in_range, _, residual, report) = best.expect("at least one candidate");
    let usable = report.items.iter().filter(|i| !i.zero_gradient).count();
    if (usable > 0 && in_range == 0) || residual > tolerance {
        return Err(AttackError::NoCandidateInRange {
            candidates: candidates_tried,
        });
    }
    Ok(report)
}
