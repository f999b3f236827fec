//! Key generation and distribution. Keys are generated at the designated
//! key-holder client (user 0); the public key goes to everyone including
//! the server, the secret key travels only on client-to-client channels.

use fedmf_core::seed::{derive_seed, STREAM_KEYGEN};
use fedmf_paillier::{
    int_from_hex, int_to_hex, keygen_with_rng, PaillierPublicKey, PaillierSecretKey,
};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::channel::Endpoint;
use crate::error::{ProtocolError, Result};
use crate::wire::{Body, Message};

/// Deterministic key generation from the run seed.
pub fn generate_keys(key_bits: u32, seed: u64) -> Result<(PaillierPublicKey, PaillierSecretKey)> {
    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, STREAM_KEYGEN));
    Ok(keygen_with_rng(key_bits, &mut rng)?)
}

pub fn pubkey_message(pk: &PaillierPublicKey, sender: u64) -> Message {
    Message {
        round: 0,
        sender,
        body: Body::PubKey {
            key_bits: pk.key_bits(),
            n: int_to_hex(pk.n()),
        },
    }
}

pub fn seckey_message(sk: &PaillierSecretKey, sender: u64) -> Message {
    Message {
        round: 0,
        sender,
        body: Body::SecKey {
            p: int_to_hex(sk.p()),
            q: int_to_hex(sk.q()),
        },
    }
}

pub fn parse_pubkey(msg: &Message) -> Result<PaillierPublicKey> {
    match &msg.body {
        Body::PubKey { n, .. } => Ok(PaillierPublicKey::from_n(int_from_hex(n)?)?),
        other => Err(ProtocolError::UnexpectedMessage {
            expected: "PUBKEY",
            got: other.tag(),
        }),
    }
}

pub fn parse_seckey(msg: &Message) -> Result<PaillierSecretKey> {
    match &msg.body {
        Body::SecKey { p, q } => Ok(PaillierSecretKey::from_primes(
            int_from_hex(p)?,
            int_from_hex(q)?,
        )?),
        other => Err(ProtocolError::UnexpectedMessage {
            expected: "SECKEY",
            got: other.tag(),
        }),
    }
}

/// Key-holder side of distribution: announce the public key to the server,
/// then hand both keys to every peer over the client-to-client channels.
pub fn distribute_keys_from_holder(
    key_bits: u32,
    seed: u64,
    holder_id: u64,
    server_ep: &mut Endpoint,
    peer_eps: &mut [Endpoint],
) -> Result<(PaillierPublicKey, PaillierSecretKey)> {
    let (pk, sk) = generate_keys(key_bits, seed)?;
    server_ep.send(&pubkey_message(&pk, holder_id))?;
    for peer in peer_eps.iter_mut() {
        peer.send(&pubkey_message(&pk, holder_id))?;
        peer.send(&seckey_message(&sk, holder_id))?;
    }
    Ok((pk, sk))
}

/// Peer side: receive both keys from the key holder.
pub fn receive_keys(key_ep: &mut Endpoint) -> Result<(PaillierPublicKey, PaillierSecretKey)> {
    let pk = parse_pubkey(&key_ep.recv()?)?;
    let sk = parse_seckey(&key_ep.recv()?)?;
    Ok((pk, sk))
}
