use thiserror::Error;

/// Protocol-level failures. Party errors during a federation run are wrapped
/// with the failing party and round for diagnosis.
#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed frame: {0}")]
    Wire(String),

    #[error("frame length {len} exceeds the {max} limit")]
    FrameTooLarge { len: u64, max: u64 },

    #[error("round mismatch: expected {expected}, got {got}")]
    RoundMismatch { expected: u32, got: u32 },

    #[error("unexpected sender: expected {expected}, got {got}")]
    SenderMismatch { expected: u64, got: u64 },

    #[error("unexpected message type: expected {expected}, got {got}")]
    UnexpectedMessage {
        expected: &'static str,
        got: &'static str,
    },

    #[error("missing key material: {0}")]
    MissingKey(&'static str),

    #[error("profile payload mode does not match the run mode")]
    ModeMismatch,

    #[error("bad real number literal {0:?}")]
    BadReal(String),

    #[error("transcript recording requires plaintext mode")]
    TranscriptNeedsPlaintext,

    #[error("not a transcript file: {0}")]
    BadTranscript(String),

    #[error("transcript was recorded in {0} mode; this operation needs plaintext")]
    TranscriptMode(String),

    #[error("{party} failed in round {round}: {source}")]
    PartyFailure {
        party: String,
        round: u32,
        #[source]
        source: Box<ProtocolError>,
    },

    #[error("party thread panicked: {0}")]
    PartyPanicked(String),

    #[error(transparent)]
    Core(#[from] fedmf_core::Error),

    #[error(transparent)]
    Paillier(#[from] fedmf_paillier::PaillierError),
}

pub type Result<T> = std::result::Result<T, ProtocolError>;
