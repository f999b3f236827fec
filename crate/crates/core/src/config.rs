//! Training configuration and payload shaping options.

use crate::error::{Error, Result};
use crate::real::Real;

/// Shape of a user's gradient upload.
///
/// `FullText` covers every item (zero vectors for unrated ones) and reveals
/// nothing about which items were rated; `PartText` covers only the rated
/// items and is proportionally cheaper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadMode {
    FullText,
    PartText,
}

/// How item-gradient uploads and user steps are scaled.
///
/// `ScaledGradient` is the standard scheme: uploads are `lr * gradient` and
/// the user takes an `lr`-sized step. `RawResidual` uploads the bare
/// residual-weighted profile `u * (r - <u, v>)` per rated item and takes a
/// unit user step; it requires zero regularization and exists so recorded
/// transcripts match the algebra the inversion attack solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadRule {
    ScaledGradient,
    RawResidual,
}

/// Hyperparameters shared by the trainers and the federation protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<R> {
    /// Latent dimension d.
    pub dim: usize,
    /// SGD step size.
    pub learning_rate: R,
    /// User-profile regularization weight.
    pub lambda_u: R,
    /// Item-profile regularization weight.
    pub mu_v: R,
    /// Hard iteration cap.
    pub max_iters: usize,
    /// Stop once the largest payload infinity-norm in a round drops below this.
    pub stop_threshold: R,
    /// Run seed; all party RNG streams derive from it.
    pub seed: u64,
    /// Profiles initialize uniformly in `[0, init_scale)`.
    pub init_scale: R,
}

impl<R: Real> Default for TrainConfig<R> {
    fn default() -> Self {
        Self {
            dim: 100,
            learning_rate: R::of(0.01),
            lambda_u: R::of(1e-4),
            mu_v: R::of(1e-4),
            max_iters: 100,
            stop_threshold: R::of(1e-4),
            seed: 0,
            init_scale: R::of(0.1),
        }
    }
}

impl<R: Real> TrainConfig<R> {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be positive".into()));
        }
        if !(self.learning_rate > R::zero()) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.lambda_u < R::zero() {
            return Err(Error::InvalidConfig("lambda_u must be >= 0".into()));
        }
        if self.mu_v < R::zero() {
            return Err(Error::InvalidConfig("mu_v must be >= 0".into()));
        }
        if self.stop_threshold < R::zero() {
            return Err(Error::InvalidConfig("stop_threshold must be >= 0".into()));
        }
        if !(self.init_scale >= R::zero() && self.init_scale.is_finite()) {
            return Err(Error::InvalidConfig("init_scale must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_validates() {
        TrainConfig::<f64>::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = TrainConfig::<f64>::default();
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::<f64>::default();
        c.lambda_u = -1.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::<f64>::default();
        c.dim = 0;
        assert!(c.validate().is_err());
    }
}
