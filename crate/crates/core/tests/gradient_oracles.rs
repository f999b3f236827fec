//! Gradient and loss checks against independent oracles: direct summation
//! and central finite differences of the per-user objective.

use fedmf_core::{
    item_gradients, local_update, loss, server_apply, user_gradient, PayloadMode, ProfileMatrix,
    RatingTable, TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Direct double-loop evaluation of the reporting objective.
fn naive_loss(
    users: &ProfileMatrix<f64>,
    items: &ProfileMatrix<f64>,
    ratings: &RatingTable<f64>,
    lambda: f64,
    mu: f64,
) -> f64 {
    let mut sum = 0.0;
    for (u, i, r) in ratings.iter() {
        let mut p = 0.0;
        for k in 0..users.dim() {
            p += users.row(u)[k] * items.row(i)[k];
        }
        sum += (r - p) * (r - p);
    }
    let mut sq_u = 0.0;
    for v in users.as_slice() {
        sq_u += v * v;
    }
    let mut sq_v = 0.0;
    for v in items.as_slice() {
        sq_v += v * v;
    }
    sum / ratings.len() as f64 + lambda * sq_u + mu * sq_v
}

/// Objective a single user descends: their own squared residuals plus the
/// regularizers on their profile and on the item profiles.
fn user_objective(
    u: &[f64],
    items: &ProfileMatrix<f64>,
    rated: &[(usize, f64)],
    lambda: f64,
    mu: f64,
) -> f64 {
    let mut sum = 0.0;
    for &(item, rating) in rated {
        let mut p = 0.0;
        for k in 0..u.len() {
            p += u[k] * items.row(item)[k];
        }
        sum += (rating - p) * (rating - p);
    }
    let mut sq_u = 0.0;
    for x in u {
        sq_u += x * x;
    }
    let mut sq_v = 0.0;
    for x in items.as_slice() {
        sq_v += x * x;
    }
    sum + lambda * sq_u + mu * sq_v
}

fn random_instance(
    rng: &mut ChaCha20Rng,
    max_users: usize,
    max_items: usize,
    max_dim: usize,
) -> (ProfileMatrix<f64>, ProfileMatrix<f64>, RatingTable<f64>) {
    let n = rng.gen_range(1..=max_users);
    let m = rng.gen_range(1..=max_items);
    let d = rng.gen_range(1..=max_dim);
    let users = ProfileMatrix::seeded_uniform(n, d, 1.0, rng.gen());
    let items = ProfileMatrix::seeded_uniform(m, d, 1.0, rng.gen());
    let mut entries = Vec::new();
    for u in 0..n {
        for i in 0..m {
            if rng.gen::<f64>() < 0.6 {
                entries.push((u, i, rng.gen_range(1.0..5.0)));
            }
        }
    }
    if entries.is_empty() {
        entries.push((0, 0, rng.gen_range(1.0..5.0)));
    }
    let ratings = RatingTable::from_entries(n, m, entries).unwrap();
    (users, items, ratings)
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm.max(1e-9)
}

#[test]
fn loss_matches_direct_summation() {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let n = 5;
        let m = 8;
        let d = rng.gen_range(1..=4);
        let users = ProfileMatrix::seeded_uniform(n, d, 1.0, rng.gen());
        let items = ProfileMatrix::seeded_uniform(m, d, 1.0, rng.gen());
        let mut entries = Vec::new();
        for u in 0..n {
            for i in 0..m {
                if rng.gen::<f64>() < 0.5 {
                    entries.push((u, i, rng.gen_range(1.0..5.0)));
                }
            }
        }
        if entries.is_empty() {
            entries.push((0, 0, 3.3));
        }
        let ratings = RatingTable::from_entries(n, m, entries).unwrap();
        let lambda = rng.gen_range(0.0..0.1);
        let mu = rng.gen_range(0.0..0.1);
        let got = loss(&users, &items, &ratings, lambda, mu).unwrap();
        let want = naive_loss(&users, &items, &ratings, lambda, mu);
        assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
    }
}

/// Central finite differences of the unregularized residual sum match the
/// analytic gradients to better than 1e-5 relative error; the same holds
/// with regularizers against the per-user objective.
#[test]
fn gradients_match_finite_differences() {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let h = 1e-6;
    for case in 0..100 {
        let (users, mut items, ratings) = random_instance(&mut rng, 10, 10, 5);
        let user = rng.gen_range(0..ratings.n_users());
        let rated: Vec<(usize, f64)> = ratings.user_ratings(user).to_vec();
        if rated.is_empty() {
            continue;
        }
        // Alternate between the bare objective and a regularized one.
        let (lambda, mu) = if case % 2 == 0 {
            (0.0, 0.0)
        } else {
            (rng.gen_range(0.0..0.05), rng.gen_range(0.0..0.05))
        };
        let mut u = users.row(user).to_vec();

        let analytic_u = user_gradient(&u, &items, &rated, lambda).unwrap();
        let mut fd_u = vec![0.0; u.len()];
        for k in 0..u.len() {
            let orig = u[k];
            u[k] = orig + h;
            let hi = user_objective(&u, &items, &rated, lambda, mu);
            u[k] = orig - h;
            let lo = user_objective(&u, &items, &rated, lambda, mu);
            u[k] = orig;
            fd_u[k] = (hi - lo) / (2.0 * h);
        }
        let err = rel_err(&analytic_u, &fd_u);
        assert!(err < 1e-5, "user gradient rel err {err} (case {case})");

        let analytic_items = item_gradients(&u, &items, &rated, mu).unwrap();
        for (item, analytic) in &analytic_items {
            let mut fd = vec![0.0; u.len()];
            for k in 0..u.len() {
                let orig = items.row(*item)[k];
                items.row_mut(*item)[k] = orig + h;
                let hi = user_objective(&u, &items, &rated, lambda, mu);
                items.row_mut(*item)[k] = orig - h;
                let lo = user_objective(&u, &items, &rated, lambda, mu);
                items.row_mut(*item)[k] = orig;
                fd[k] = (hi - lo) / (2.0 * h);
            }
            let err = rel_err(analytic, &fd);
            assert!(err < 1e-5, "item {item} gradient rel err {err} (case {case})");
        }
    }
}

/// One local update applied through the payload machinery equals a directly
/// computed single-user SGD step.
#[test]
fn local_update_matches_single_step_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(31);
    for _ in 0..50 {
        let (users, items, ratings) = random_instance(&mut rng, 6, 8, 4);
        let user = rng.gen_range(0..ratings.n_users());
        let rated: Vec<(usize, f64)> = ratings.user_ratings(user).to_vec();
        let config = TrainConfig {
            dim: users.dim(),
            learning_rate: 0.05,
            lambda_u: 0.01,
            mu_v: 0.02,
            ..TrainConfig::default()
        };
        let u = users.row(user).to_vec();

        // Oracle: explicit loops over the update equations.
        let d = u.len();
        let mut expected_u = u.clone();
        let mut expected_items = items.clone();
        let mut acc = vec![0.0; d];
        for &(item, rating) in &rated {
            let v = items.row(item);
            let resid = rating - u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            for k in 0..d {
                acc[k] += v[k] * resid;
            }
            for k in 0..d {
                let g = -2.0 * u[k] * resid + 2.0 * config.mu_v * v[k];
                expected_items.row_mut(item)[k] -= config.learning_rate * g;
            }
        }
        for k in 0..d {
            let g = -2.0 * acc[k] + 2.0 * config.lambda_u * u[k];
            expected_u[k] -= config.learning_rate * g;
        }

        for mode in [PayloadMode::PartText, PayloadMode::FullText] {
            let (u_new, payload) = local_update(&u, &items, &rated, &config, mode, user).unwrap();
            let mut v_new = items.clone();
            server_apply(&mut v_new, &payload).unwrap();
            for k in 0..d {
                assert!((u_new[k] - expected_u[k]).abs() < 1e-12);
            }
            let diff = v_new.max_abs_diff(&expected_items).unwrap();
            assert!(diff < 1e-12, "mode {mode:?} diff {diff}");
        }
    }
}

/// FullText and PartText payloads from the same state produce identical
/// profiles after application.
#[test]
fn payload_shapes_apply_identically() {
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    for _ in 0..50 {
        let (users, items, ratings) = random_instance(&mut rng, 6, 8, 4);
        let user = rng.gen_range(0..ratings.n_users());
        let rated: Vec<(usize, f64)> = ratings.user_ratings(user).to_vec();
        let config = TrainConfig {
            dim: users.dim(),
            learning_rate: 0.03,
            lambda_u: 1e-3,
            mu_v: 1e-3,
            ..TrainConfig::default()
        };
        let u = users.row(user).to_vec();
        let (_, part) = local_update(&u, &items, &rated, &config, PayloadMode::PartText, user).unwrap();
        let (_, full) = local_update(&u, &items, &rated, &config, PayloadMode::FullText, user).unwrap();
        assert_eq!(full.entries.len(), items.rows());
        let mut v_part = items.clone();
        let mut v_full = items.clone();
        server_apply(&mut v_part, &part).unwrap();
        server_apply(&mut v_full, &full).unwrap();
        assert_eq!(v_part, v_full);
    }
}
