//! Dataset ingestion: MovieLens-format CSV parsing, popularity-based item
//! subsetting, and synthetic instance generators.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::profile::ProfileMatrix;
use crate::ratings::RatingTable;
use crate::real::Real;

/// Summary statistics of a rating table.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
    pub density: f64,
}

impl DatasetStats {
    pub fn of<R: Real>(table: &RatingTable<R>) -> Self {
        let cells = table.n_users() * table.n_items();
        Self {
            n_users: table.n_users(),
            n_items: table.n_items(),
            n_ratings: table.len(),
            density: if cells == 0 {
                0.0
            } else {
                table.len() as f64 / cells as f64
            },
        }
    }
}

/// A parsed dataset: contiguous internal ids plus the original-id maps.
#[derive(Debug, Clone)]
pub struct LoadedRatings<R> {
    pub table: RatingTable<R>,
    /// Internal user index -> original id.
    pub user_ids: Vec<u64>,
    /// Internal item index -> original id.
    pub item_ids: Vec<u64>,
}

impl<R: Real> LoadedRatings<R> {
    pub fn stats(&self) -> DatasetStats {
        DatasetStats::of(&self.table)
    }
}

/// Parses a MovieLens-format `ratings.csv` (`userId,movieId,rating,timestamp`
/// with a header row). Users and items are re-indexed contiguously in order
/// of first appearance.
pub fn parse_ratings<R: Real>(path: impl AsRef<Path>) -> Result<LoadedRatings<R>> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: path_str.clone(),
                source: std::io::Error::other(e.to_string()),
            },
            _ => Error::MalformedRow {
                path: path_str.clone(),
                line: 1,
                reason: e.to_string(),
            },
        })?;

    let mut user_index: HashMap<u64, usize> = HashMap::new();
    let mut item_index: HashMap<u64, usize> = HashMap::new();
    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    let mut entries: Vec<(usize, usize, R)> = Vec::new();
    let mut seen: HashMap<(usize, usize), ()> = HashMap::new();

    for record in reader.records() {
        let record = record.map_err(|e| Error::MalformedRow {
            path: path_str.clone(),
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |reason: &str| Error::MalformedRow {
            path: path_str.clone(),
            line,
            reason: reason.to_string(),
        };
        if record.len() < 3 {
            return Err(malformed("expected userId,movieId,rating,timestamp"));
        }
        let user_raw: u64 = record[0].trim().parse().map_err(|_| malformed("bad userId"))?;
        let item_raw: u64 = record[1].trim().parse().map_err(|_| malformed("bad movieId"))?;
        let rating: f64 = record[2].trim().parse().map_err(|_| malformed("bad rating"))?;
        if !rating.is_finite() {
            return Err(malformed("non-finite rating"));
        }

        let user = *user_index.entry(user_raw).or_insert_with(|| {
            user_ids.push(user_raw);
            user_ids.len() - 1
        });
        let item = *item_index.entry(item_raw).or_insert_with(|| {
            item_ids.push(item_raw);
            item_ids.len() - 1
        });
        if seen.insert((user, item), ()).is_some() {
            return Err(Error::DuplicateRow {
                path: path_str,
                line,
                user: user_raw,
                item: item_raw,
            });
        }
        entries.push((user, item, R::of(rating)));
    }

    let table = RatingTable::from_entries(user_ids.len(), item_ids.len(), entries)?;
    Ok(LoadedRatings {
        table,
        user_ids,
        item_ids,
    })
}

/// Keeps the `k` most-rated items (ties broken by smaller original id) and
/// re-indexes them in selection order. When `drop_empty_users` is set, users
/// left without ratings disappear from the user index as well.
pub fn select_top_items<R: Real>(
    data: &LoadedRatings<R>,
    k: usize,
    drop_empty_users: bool,
) -> Result<LoadedRatings<R>> {
    let n_items = data.table.n_items();
    if k == 0 || k > n_items {
        return Err(Error::ItemCountOutOfRange { k, n_items });
    }
    let counts = data.table.item_counts();
    let mut order: Vec<usize> = (0..n_items).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(counts[i]), data.item_ids[i]));
    order.truncate(k);

    let mut item_map: HashMap<usize, usize> = HashMap::new();
    let mut item_ids = Vec::with_capacity(k);
    for (new_id, &old_id) in order.iter().enumerate() {
        item_map.insert(old_id, new_id);
        item_ids.push(data.item_ids[old_id]);
    }

    let kept: Vec<(usize, usize, R)> = data
        .table
        .iter()
        .filter_map(|(u, i, r)| item_map.get(&i).map(|&ni| (u, ni, r)))
        .collect();

    if drop_empty_users {
        let mut user_map: HashMap<usize, usize> = HashMap::new();
        let mut user_ids = Vec::new();
        let mut entries = Vec::with_capacity(kept.len());
        for (u, i, r) in kept {
            let nu = *user_map.entry(u).or_insert_with(|| {
                user_ids.push(data.user_ids[u]);
                user_ids.len() - 1
            });
            entries.push((nu, i, r));
        }
        Ok(LoadedRatings {
            table: RatingTable::from_entries(user_ids.len(), k, entries)?,
            user_ids,
            item_ids,
        })
    } else {
        Ok(LoadedRatings {
            table: RatingTable::from_entries(data.table.n_users(), k, kept)?,
            user_ids: data.user_ids.clone(),
            item_ids,
        })
    }
}

fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    // Box-Muller on two uniforms from (0, 1].
    let a: f64 = 1.0 - rng.gen::<f64>();
    let b: f64 = rng.gen();
    (-2.0 * a.ln()).sqrt() * (std::f64::consts::TAU * b).cos()
}

/// Synthetic low-rank instance: ratings are `<u_i, v_j>` plus Gaussian noise
/// on a Bernoulli(density) mask. Ground-truth profiles are returned for
/// oracle tests.
pub fn synth_lowrank<R: Real>(
    n_users: usize,
    n_items: usize,
    d_true: usize,
    noise: f64,
    density: f64,
    seed: u64,
) -> Result<(RatingTable<R>, ProfileMatrix<R>, ProfileMatrix<R>)> {
    if n_users == 0 || n_items == 0 || d_true == 0 {
        return Err(Error::InvalidConfig("synthetic sizes must be positive".into()));
    }
    if !(0.0 < density && density <= 1.0) {
        return Err(Error::InvalidConfig("density must lie in (0, 1]".into()));
    }
    if noise < 0.0 {
        return Err(Error::InvalidConfig("noise must be >= 0".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let users = ProfileMatrix::<R>::seeded_uniform(n_users, d_true, R::one(), rng.gen());
    let items = ProfileMatrix::<R>::seeded_uniform(n_items, d_true, R::one(), rng.gen());
    let mut entries = Vec::new();
    for u in 0..n_users {
        for i in 0..n_items {
            if rng.gen::<f64>() < density {
                let clean = crate::math::predict(users.row(u), items.row(i))?;
                let value = clean + R::of(noise * gaussian(&mut rng));
                entries.push((u, i, value));
            }
        }
    }
    Ok((
        RatingTable::from_entries(n_users, n_items, entries)?,
        users,
        items,
    ))
}

/// Synthetic instance with ratings drawn uniformly from `[lo, hi]` on a
/// Bernoulli(density) mask; used for recovery experiments where the rating
/// range matters more than low-rank structure.
pub fn synth_uniform<R: Real>(
    n_users: usize,
    n_items: usize,
    density: f64,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<RatingTable<R>> {
    if n_users == 0 || n_items == 0 {
        return Err(Error::InvalidConfig("synthetic sizes must be positive".into()));
    }
    if !(0.0 < density && density <= 1.0) {
        return Err(Error::InvalidConfig("density must lie in (0, 1]".into()));
    }
    if !(lo <= hi) {
        return Err(Error::InvalidConfig("rating range must satisfy lo <= hi".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    for u in 0..n_users {
        for i in 0..n_items {
            if rng.gen::<f64>() < density {
                entries.push((u, i, R::of(rng.gen::<f64>() * (hi - lo) + lo)));
            }
        }
    }
    RatingTable::from_entries(n_users, n_items, entries)
}

/// Cumulative `(item_rank, total_ratings)` anchors of the MovieLens
/// ml-latest-small popularity curve (items ordered most-rated first).
const POPULARITY_ANCHORS: &[(usize, usize)] = &[
    (40, 8307),
    (50, 9807),
    (60, 11214),
    (80, 13817),
    (160, 22282),
    (320, 34172),
    (640, 49706),
    (1280, 67558),
    (2560, 83616),
    (9724, 100836),
];

/// Number of users in ml-latest-small.
pub const ML_SMALL_USERS: usize = 610;
/// Number of items in ml-latest-small.
pub const ML_SMALL_ITEMS: usize = 9724;
/// Number of ratings in ml-latest-small.
pub const ML_SMALL_RATINGS: usize = 100836;

/// Synthetic stand-in for ml-latest-small: 610 users and an item popularity
/// curve interpolated through the real dataset's cumulative counts, for
/// benchmarking when the actual file is not on disk. Ratings are half-star
/// values in `[0.5, 5.0]`.
pub fn synth_movielens_like<R: Real>(seed: u64) -> Result<LoadedRatings<R>> {
    let n_users = ML_SMALL_USERS;
    let n_items = ML_SMALL_ITEMS;
    let mut per_item = Vec::with_capacity(n_items);
    let mut prev = (0usize, 0usize);
    for &(rank, cum) in POPULARITY_ANCHORS {
        let span = rank - prev.0;
        let total = cum - prev.1;
        let base = total / span;
        let extra = total % span;
        // Spread the remainder over the first items of the span so counts
        // stay non-increasing overall.
        for k in 0..span {
            per_item.push(base + usize::from(k < extra));
        }
        prev = (rank, cum);
    }
    debug_assert_eq!(per_item.len(), n_items);
    debug_assert_eq!(per_item.iter().sum::<usize>(), ML_SMALL_RATINGS);

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(ML_SMALL_RATINGS);
    let mut raters: Vec<usize> = (0..n_users).collect();
    for (item, &count) in per_item.iter().enumerate() {
        let count = count.min(n_users);
        // Partial Fisher-Yates: the first `count` entries become the raters.
        for k in 0..count {
            let j = rng.gen_range(k..n_users);
            raters.swap(k, j);
        }
        for &user in &raters[..count] {
            let half_stars = rng.gen_range(1..=10u32);
            entries.push((user, item, R::of(half_stars as f64 * 0.5)));
        }
    }
    let table = RatingTable::from_entries(n_users, n_items, entries)?;
    Ok(LoadedRatings {
        user_ids: (1..=n_users as u64).collect(),
        item_ids: (1..=n_items as u64).collect(),
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_single_row() {
        let f = write_csv("userId,movieId,rating,timestamp\n1,296,5.0,1147880044\n");
        let data: LoadedRatings<f64> = parse_ratings(f.path()).unwrap();
        assert_eq!(data.stats().n_ratings, 1);
        assert_eq!(data.user_ids, vec![1]);
        assert_eq!(data.item_ids, vec![296]);
        assert_eq!(data.table.get(0, 0), Some(5.0));
    }

    #[test]
    fn empty_file_gives_zero_stats() {
        let f = write_csv("userId,movieId,rating,timestamp\n");
        let data: LoadedRatings<f64> = parse_ratings(f.path()).unwrap();
        let stats = data.stats();
        assert_eq!(stats.n_users, 0);
        assert_eq!(stats.n_items, 0);
        assert_eq!(stats.n_ratings, 0);
    }

    #[test]
    fn malformed_row_reports_line() {
        let f = write_csv("userId,movieId,rating,timestamp\n1,296,5.0,1\n2,xx,3.0,1\n");
        let err = parse_ratings::<f64>(f.path()).unwrap_err();
        match err {
            Error::MalformedRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn duplicate_pair_rejected() {
        let f = write_csv("userId,movieId,rating,timestamp\n1,296,5.0,1\n1,296,3.0,2\n");
        let err = parse_ratings::<f64>(f.path()).unwrap_err();
        assert!(matches!(err, Error::DuplicateRow { user: 1, item: 296, .. }));
    }

    fn toy_data() -> LoadedRatings<f64> {
        let f = write_csv(
            "userId,movieId,rating,timestamp\n\
             1,10,5.0,1\n1,20,4.0,1\n1,30,3.0,1\n\
             2,10,2.0,1\n2,20,1.0,1\n\
             3,10,4.5,1\n",
        );
        parse_ratings(f.path()).unwrap()
    }

    #[test]
    fn top_items_selects_most_rated_first() {
        let data = toy_data();
        let top = select_top_items(&data, 2, false).unwrap();
        // item 10 has 3 ratings, item 20 has 2.
        assert_eq!(top.item_ids, vec![10, 20]);
        assert_eq!(top.table.len(), 5);
        assert_eq!(top.table.n_users(), 3);
    }

    #[test]
    fn top_items_identity_when_k_is_n() {
        let data = toy_data();
        let all = select_top_items(&data, 3, false).unwrap();
        assert_eq!(all.table.len(), data.table.len());
        // Re-indexed by popularity, but the multiset of ratings is unchanged.
        let mut a: Vec<_> = all.table.iter().map(|(_, _, r)| r.to_bits()).collect();
        let mut b: Vec<_> = data.table.iter().map(|(_, _, r)| r.to_bits()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn top_items_monotone_in_k() {
        let data = toy_data();
        let mut prev = 0;
        for k in 1..=3 {
            let len = select_top_items(&data, k, false).unwrap().table.len();
            assert!(len >= prev);
            prev = len;
        }
    }

    #[test]
    fn top_items_drop_empty_users() {
        let data = toy_data();
        // Keeping only item 30 leaves users 2 and 3 empty.
        let only_30 = select_top_items(&data, 3, true).unwrap();
        assert_eq!(only_30.table.n_users(), 3);
        let top1 = select_top_items(&data, 1, true).unwrap();
        assert_eq!(top1.table.n_users(), 3); // item 10 was rated by everyone
    }

    #[test]
    fn top_items_rejects_out_of_range() {
        let data = toy_data();
        assert!(select_top_items(&data, 0, false).is_err());
        assert!(select_top_items(&data, 4, false).is_err());
    }

    #[test]
    fn lowrank_perfect_fit_at_zero_noise() {
        let (ratings, users, items) = synth_lowrank::<f64>(4, 5, 2, 0.0, 1.0, 3).unwrap();
        assert_eq!(ratings.len(), 20);
        let l = crate::math::loss(&users, &items, &ratings, 0.0, 0.0).unwrap();
        assert!(l < 1e-24, "loss {l}");
    }

    #[test]
    fn lowrank_is_deterministic() {
        let a = synth_lowrank::<f64>(3, 3, 2, 0.1, 0.5, 9).unwrap();
        let b = synth_lowrank::<f64>(3, 3, 2, 0.1, 0.5, 9).unwrap();
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn lowrank_density_controls_mask() {
        // 10x20 at density 0.1: expect about 20 ratings, binomial spread.
        let (ratings, _, _) = synth_lowrank::<f64>(10, 20, 2, 0.0, 0.1, 17).unwrap();
        let n = ratings.len() as f64;
        // mean 20, sd sqrt(200 * 0.1 * 0.9) ~ 4.24; allow 5 sd.
        assert!((n - 20.0).abs() < 22.0, "got {n} ratings");
    }

    #[test]
    fn movielens_like_matches_marginals() {
        let data = synth_movielens_like::<f64>(5).unwrap();
        let stats = data.stats();
        assert_eq!(stats.n_users, ML_SMALL_USERS);
        assert_eq!(stats.n_items, ML_SMALL_ITEMS);
        assert_eq!(stats.n_ratings, ML_SMALL_RATINGS);
        let counts = data.table.item_counts();
        let top40: usize = {
            let mut c = counts.clone();
            c.sort_unstable_by(|a, b| b.cmp(a));
            c[..40].iter().sum()
        };
        assert_eq!(top40, 8307);
    }
}
