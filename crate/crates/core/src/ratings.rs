//! Sparse per-user rating storage.

use crate::error::{Error, Result};
use crate::real::Real;

/// Sparse user-item rating table, indexed by user for iteration.
///
/// Holds at most one rating per `(user, item)` pair; per-user entries are
/// kept sorted by item id so sweeps are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTable<R> {
    n_users: usize,
    n_items: usize,
    by_user: Vec<Vec<(usize, R)>>,
    len: usize,
}

impl<R: Real> RatingTable<R> {
    /// Builds a table from `(user, item, rating)` triples, validating ranges
    /// and rejecting duplicate pairs.
    pub fn from_entries(
        n_users: usize,
        n_items: usize,
        entries: impl IntoIterator<Item = (usize, usize, R)>,
    ) -> Result<Self> {
        let mut by_user: Vec<Vec<(usize, R)>> = vec![Vec::new(); n_users];
        let mut len = 0;
        for (user, item, rating) in entries {
            if user >= n_users {
                return Err(Error::UserOutOfRange { user, n_users });
            }
            if item >= n_items {
                return Err(Error::ItemOutOfRange { item, n_items });
            }
            by_user[user].push((item, rating));
            len += 1;
        }
        for (user, ratings) in by_user.iter_mut().enumerate() {
            ratings.sort_by_key(|&(item, _)| item);
            for pair in ratings.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(Error::DuplicateRating {
                        user,
                        item: pair[0].0,
                    });
                }
            }
        }
        Ok(Self {
            n_users,
            n_items,
            by_user,
            len,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    /// Total number of ratings.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The rated `(item, rating)` pairs of one user, sorted by item id.
    pub fn user_ratings(&self, user: usize) -> &[(usize, R)] {
        &self.by_user[user]
    }

    /// Iterates all `(user, item, rating)` triples in user-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, R)> + '_ {
        self.by_user
            .iter()
            .enumerate()
            .flat_map(|(u, v)| v.iter().map(move |&(i, r)| (u, i, r)))
    }

    /// Rating for `(user, item)` if present.
    pub fn get(&self, user: usize, item: usize) -> Option<R> {
        self.by_user[user]
            .binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|idx| self.by_user[user][idx].1)
    }

    /// Number of ratings per item.
    pub fn item_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_items];
        for (_, item, _) in self.iter() {
            counts[item] += 1;
        }
        counts
    }
}
