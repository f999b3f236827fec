//! Paillier additively homomorphic encryption over GMP integers, with a
//! signed fixed-point encoding for reals.
//!
//! Supports the three ciphertext operations the federation server relies on
//! (ciphertext addition, plaintext addition, plaintext multiplication) and a
//! CRT fast path for parties holding the secret key. Ciphertexts and keys
//! are immutable values, safe to share across threads; encryption draws
//! randomness from a caller-supplied generator, so concurrent callers each
//! bring their own.

pub mod cipher;
pub mod encoding;
pub mod error;
pub mod keys;
pub mod prime;
pub mod rnd;

pub use cipher::{int_from_hex, int_to_hex, Ciphertext};
pub use encoding::{
    decode, decrypt_encoded, encode, encode_limit, encrypt_encoded, encrypt_encoded_crt,
    EncodedNumber, ADDITION_HEADROOM_BITS, DEFAULT_EXPONENT,
};
pub use error::{PaillierError, Result};
pub use keys::{keygen, keygen_with_rng, PaillierPublicKey, PaillierSecretKey};

pub use rug::Integer;
