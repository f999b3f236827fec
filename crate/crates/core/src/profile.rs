//! Dense latent-factor matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::real::Real;

/// Dense `rows x dim` matrix of latent factors, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMatrix<R> {
    rows: usize,
    dim: usize,
    values: Vec<R>,
}

impl<R: Real> ProfileMatrix<R> {
    /// Wraps a row-major buffer, requiring `dim > 0` and finite values.
    pub fn from_vec(rows: usize, dim: usize, values: Vec<R>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("profile dim must be positive".into()));
        }
        if values.len() != rows * dim {
            return Err(Error::DimensionMismatch {
                left: values.len(),
                right: rows * dim,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { rows, dim, values })
    }

    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            rows,
            dim,
            values: vec![R::zero(); rows * dim],
        }
    }

    /// Seeded initializer: entries uniform in `[0, scale)`, row-major draw order.
    ///
    /// Entries are drawn as `f64` and converted, so every scalar type sees the
    /// same underlying stream.
    pub fn seeded_uniform(rows: usize, dim: usize, scale: R, seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let values = (0..rows * dim)
            .map(|_| R::of(rng.gen::<f64>()) * scale)
            .collect();
        Self { rows, dim, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, r: usize) -> &[R] {
        &self.values[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [R] {
        &mut self.values[r * self.dim..(r + 1) * self.dim]
    }

    /// Row-major view of all values.
    pub fn as_slice(&self) -> &[R] {
        &self.values
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[R]> {
        self.values.chunks(self.dim)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Squared Frobenius norm.
    pub fn sq_norm(&self) -> R {
        self.values.iter().fold(R::zero(), |acc, &v| acc + v * v)
    }

    /// Largest absolute entry-wise difference; `None` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> Option<R> {
        if self.rows != other.rows || self.dim != other.dim {
            return None;
        }
        Some(
            self.values
                .iter()
                .zip(&other.values)
                .fold(R::zero(), |acc, (&a, &b)| acc.max((a - b).abs())),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_init_is_deterministic_and_in_range() {
        let a = ProfileMatrix::<f64>::seeded_uniform(4, 3, 0.1, 99);
        let b = ProfileMatrix::<f64>::seeded_uniform(4, 3, 0.1, 99);
        assert_eq!(a, b);
        assert!(a.as_slice().iter().all(|&v| (0.0..0.1).contains(&v)));
        let c = ProfileMatrix::<f64>::seeded_uniform(4, 3, 0.1, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(ProfileMatrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(ProfileMatrix::from_vec(1, 2, vec![f64::NAN, 0.0]).is_err());
        assert!(ProfileMatrix::<f64>::from_vec(1, 0, vec![]).is_err());
    }

    #[test]
    fn max_abs_diff_basic() {
        let a = ProfileMatrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        let b = ProfileMatrix::from_vec(1, 2, vec![1.5, 2.0]).unwrap();
        assert_eq!(a.max_abs_diff(&b), Some(0.5));
    }
}
