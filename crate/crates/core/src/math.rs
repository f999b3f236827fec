//! Objective and prediction primitives.

use crate::error::{Error, Result};
use crate::profile::ProfileMatrix;
use crate::ratings::RatingTable;
use crate::real::Real;

/// Inner product of equal-length slices; summation is left to right.
pub(crate) fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(R::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Predicted rating `<u, v>`.
pub fn predict<R: Real>(u: &[R], v: &[R]) -> Result<R> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(dot(u, v))
}

/// Regularized mean squared error over the rated pairs:
/// `(1/M) * sum (r - <u, v>)^2 + lambda * ||U||^2 + mu * ||V||^2`.
///
/// Note the gradient routines deliberately omit the `1/M` factor; this is the
/// reporting objective only.
pub fn loss<R: Real>(
    users: &ProfileMatrix<R>,
    items: &ProfileMatrix<R>,
    ratings: &RatingTable<R>,
    lambda_u: R,
    mu_v: R,
) -> Result<R> {
    if ratings.is_empty() {
        return Err(Error::EmptyRatings);
    }
    let mut sum = R::zero();
    for user in 0..ratings.n_users() {
        let u = users.row(user);
        for &(item, rating) in ratings.user_ratings(user) {
            let resid = rating - dot(u, items.row(item));
            sum = sum + resid * resid;
        }
    }
    let m = R::from_usize(ratings.len()).expect("rating count");
    Ok(sum / m + lambda_u * users.sq_norm() + mu_v * items.sq_norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_matches_inner_product() {
        assert_eq!(predict(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(predict(&[0.0, 0.0], &[5.0, 5.0]).unwrap(), 0.0);
        assert_eq!(predict(&[0.5], &[4.0]).unwrap(), 2.0);
    }

    #[test]
    fn predict_rejects_mismatch() {
        assert!(predict(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn loss_single_rating() {
        // r = 5, <u, v> = 2 -> (5 - 2)^2 = 9
        let users = ProfileMatrix::from_vec(1, 1, vec![2.0]).unwrap();
        let items = ProfileMatrix::from_vec(1, 1, vec![1.0]).unwrap();
        let ratings = RatingTable::from_entries(1, 1, vec![(0, 0, 5.0)]).unwrap();
        assert_eq!(loss(&users, &items, &ratings, 0.0, 0.0).unwrap(), 9.0);
    }

    #[test]
    fn loss_zero_on_perfect_fit() {
        let users = ProfileMatrix::from_vec(2, 2, vec![1.0, 2.0, 0.5, 1.0]).unwrap();
        let items = ProfileMatrix::from_vec(2, 2, vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        let entries: Vec<_> = (0..2)
            .flat_map(|u| (0..2).map(move |i| (u, i)))
            .map(|(u, i)| {
                (u, i, predict(users.row(u), items.row(i)).unwrap())
            })
            .collect();
        let ratings = RatingTable::from_entries(2, 2, entries).unwrap();
        assert_eq!(loss(&users, &items, &ratings, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn loss_rejects_empty() {
        let users = ProfileMatrix::<f64>::zeros(1, 1);
        let items = ProfileMatrix::<f64>::zeros(1, 1);
        let ratings = RatingTable::from_entries(1, 1, vec![]).unwrap();
        assert!(matches!(
            loss(&users, &items, &ratings, 0.0, 0.0),
            Err(Error::EmptyRatings)
        ));
    }
}
