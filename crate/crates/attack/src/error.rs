use thiserror::Error;

/// Attack preconditions and failure modes. `NoRootBracketed` is the one
/// "expected" failure: the grid scan found no usable sign change.
#[derive(Debug, Error)]
pub enum AttackError {
    #[error("attack needs rounds {round} and {}, transcript has {rounds}", round + 1)]
    MissingRounds { round: usize, rounds: usize },

    #[error("user {user} did not upload in round {round}")]
    UserMissing { user: usize, round: usize },

    #[error("transcript was recorded with nonzero regularization; the recovery algebra requires lambda = mu = 0")]
    RegularizedTranscript,

    #[error("no probe items: every rated item has a zero gradient component in rounds {round} or {}", round + 1)]
    NoProbeItems { round: usize },

    #[error("no root bracketed on the search grid ({brackets} sign changes over {items} probe items)")]
    NoRootBracketed { brackets: usize, items: usize },

    #[error("no candidate root produced in-range ratings ({candidates} candidates tried)")]
    NoCandidateInRange { candidates: usize },

    #[error("reference coordinate {k} has a zero gradient on the reference item")]
    ZeroReferenceGradient { k: usize },

    #[error(transparent)]
    Core(#[from] fedmf_core::Error),
}

impl AttackError {
    /// True for the failure class the acceptance criteria tolerate: the
    /// grid simply failed to bracket a root.
    pub fn is_bracketing_failure(&self) -> bool {
        matches!(
            self,
            AttackError::NoRootBracketed { .. } | AttackError::NoCandidateInRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, AttackError>;
