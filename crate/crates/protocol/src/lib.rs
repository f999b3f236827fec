//! The FedMF client/server protocol: framed JSON wire format, in-memory and
//! TCP transports, key distribution, the synchronous round driver, and
//! transcript files.

pub mod channel;
pub mod client;
pub mod error;
pub mod keys;
pub mod run;
pub mod server;
pub mod transcript_io;
pub mod wire;

pub use channel::{mem_duplex, tcp_duplex, Endpoint};
pub use client::ClientState;
pub use error::{ProtocolError, Result};
pub use keys::{distribute_keys_from_holder, generate_keys, receive_keys};
pub use run::{
    run_federation, FederationResult, Mode, RoundMetrics, RunMetrics, RunOptions, Transport,
};
pub use server::{server_init, EncryptedItemProfiles, ServerProfiles, ServerState};
pub use transcript_io::{read_transcript, write_transcript};
pub use wire::{Body, GradientBody, Message, ProfilesBody, ShapeTag, SERVER_SENDER};
