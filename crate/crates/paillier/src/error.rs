use thiserror::Error;

/// Errors from key generation, ciphertext operations, and encoding.
#[derive(Debug, Error)]
pub enum PaillierError {
    #[error("key_bits must be even and >= 8, got {0}")]
    InvalidKeyBits(u32),

    #[error("{0} is not prime")]
    NotPrime(String),

    #[error("p and q must differ")]
    PrimesEqual,

    #[error("modulus too small: n = {0} (need n >= 15)")]
    ModulusTooSmall(String),

    #[error("lambda is not invertible modulo n")]
    NotInvertible,

    #[error("plaintext out of range [0, n)")]
    PlaintextOutOfRange,

    #[error("ciphertext out of range [0, n^2)")]
    CiphertextOutOfRange,

    #[error("encryption randomness must lie in (0, n) and be coprime to n")]
    BadRandomness,

    #[error("ciphertext exponents differ: {left} vs {right}")]
    ExponentMismatch { left: i64, right: i64 },

    #[error("plaintext multiplier out of range [0, n)")]
    MultiplierOutOfRange,

    #[error("value does not fit the encoding: |mantissa| >= {limit}")]
    EncodeOverflow { limit: String },

    #[error("cannot encode a non-finite value")]
    NonFiniteValue,

    #[error("mantissa in the dead zone [max_number, n - max_number]: corrupted or overflowed")]
    DeadZone,

    #[error("invalid hex integer: {0:?}")]
    BadHex(String),
}

pub type Result<T> = std::result::Result<T, PaillierError>;
