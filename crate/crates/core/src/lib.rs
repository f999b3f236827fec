//! Numeric core of a federated matrix-factorization recommender.
//!
//! Holds the rating/profile domain types, the SGD objective and gradients,
//! two reference trainers (a centralized oracle and the user-level
//! distributed sweep it matches bit for bit), transcript recording, and
//! dataset tooling. Everything numeric is generic over [`Real`]; [`Scalar`]
//! is the concrete type the protocol and CLI layers use.

pub mod config;
pub mod data;
pub mod error;
pub mod gradient;
pub mod math;
pub mod profile;
pub mod ratings;
pub mod real;
pub mod seed;
pub mod trainer;
pub mod transcript;

pub use config::{PayloadMode, PayloadRule, TrainConfig};
pub use error::{Error, Result};
pub use gradient::{
    item_gradients, local_update, residual_local_update, server_apply, user_gradient,
    GradientPayload,
};
pub use math::{loss, predict};
pub use profile::ProfileMatrix;
pub use ratings::RatingTable;
pub use real::Real;
pub use trainer::{init_profiles, train_centralized, train_distributed_plaintext, TrainResult};
pub use transcript::{Transcript, TranscriptRound};

/// Concrete scalar type used by the protocol and CLI layers.
pub type Scalar = f64;
