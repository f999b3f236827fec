//! Signed fixed-point encoding of reals onto the plaintext space.
//!
//! A real `x` becomes the pair `(mantissa, exponent)` with
//! `mantissa = round(x * 2^-exponent) mod n`; negatives wrap above
//! `max_number = floor(n / 2)`. Every party uses the same fixed exponent, so
//! homomorphic sums never need recalibration and the exponent itself carries
//! no information.

use rand::RngCore;
use rug::ops::RemRounding;
use rug::Integer;

use fedmf_core::Real;

use crate::cipher::Ciphertext;
use crate::error::{PaillierError, Result};
use crate::keys::{PaillierPublicKey, PaillierSecretKey};

/// Default global exponent: mantissas are 2^40-scaled.
pub const DEFAULT_EXPONENT: i64 = -40;

/// Headroom reserved below `max_number` so this many doublings' worth of
/// accumulated additions cannot wrap past the sign threshold.
pub const ADDITION_HEADROOM_BITS: u32 = 20;

/// Fixed-point representation of a signed real on `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedNumber {
    pub mantissa: Integer,
    pub exponent: i64,
}

/// Largest mantissa magnitude `encode` accepts for this key: `max_number`
/// shifted down by the addition headroom. Toy moduli too small to reserve
/// headroom fall back to `max_number` itself.
pub fn encode_limit(pk: &PaillierPublicKey) -> Integer {
    let limit = Integer::from(pk.max_number() >> ADDITION_HEADROOM_BITS);
    if limit == 0 {
        pk.max_number().clone()
    } else {
        limit
    }
}

/// Encodes a real at the given exponent.
pub fn encode<R: Real>(x: R, exponent: i64, pk: &PaillierPublicKey) -> Result<EncodedNumber> {
    let x = x.to_f64().filter(|v| v.is_finite()).ok_or(PaillierError::NonFiniteValue)?;
    let scaled = x * 2f64.powi(-exponent as i32);
    if !scaled.is_finite() {
        return Err(PaillierError::NonFiniteValue);
    }
    let mantissa = Integer::from_f64(scaled.round()).ok_or(PaillierError::NonFiniteValue)?;
    let limit = encode_limit(pk);
    if Integer::from(mantissa.abs_ref()) >= limit {
        return Err(PaillierError::EncodeOverflow {
            limit: limit.to_string(),
        });
    }
    let mantissa = mantissa.rem_euc(pk.n());
    Ok(EncodedNumber { mantissa, exponent })
}

/// Decodes back to a real. Mantissas above `max_number` are negative;
/// values inside `[max_number, n - max_number]` signal corruption or an
/// overflowed accumulation.
pub fn decode<R: Real>(e: &EncodedNumber, pk: &PaillierPublicKey) -> Result<R> {
    if e.mantissa < 0 || e.mantissa >= *pk.n() {
        return Err(PaillierError::PlaintextOutOfRange);
    }
    let max_number = pk.max_number();
    let signed = if e.mantissa < *max_number {
        e.mantissa.clone()
    } else if e.mantissa > Integer::from(pk.n() - max_number) {
        Integer::from(&e.mantissa - pk.n())
    } else {
        return Err(PaillierError::DeadZone);
    };
    let value = signed.to_f64() * 2f64.powi(e.exponent as i32);
    Ok(R::of(value))
}

/// Encrypts the mantissa; the exponent rides alongside in the clear.
pub fn encrypt_encoded(
    pk: &PaillierPublicKey,
    e: &EncodedNumber,
    rng: &mut dyn RngCore,
) -> Result<Ciphertext> {
    Ok(pk.encrypt(&e.mantissa, rng)?.with_exponent(e.exponent))
}

/// CRT-assisted variant for parties holding the secret key.
pub fn encrypt_encoded_crt(
    sk: &PaillierSecretKey,
    e: &EncodedNumber,
    rng: &mut dyn RngCore,
) -> Result<Ciphertext> {
    Ok(sk.encrypt_crt(&e.mantissa, rng)?.with_exponent(e.exponent))
}

/// Decrypts to an encoded number, preserving the exponent verbatim.
pub fn decrypt_encoded(sk: &PaillierSecretKey, c: &Ciphertext) -> Result<EncodedNumber> {
    Ok(EncodedNumber {
        mantissa: sk.decrypt_crt(c)?,
        exponent: c.exponent(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// n = 143 (p = 11, q = 13): big enough that mantissa 24 stays positive
    /// (max_number = 71).
    fn toy() -> PaillierSecretKey {
        PaillierSecretKey::from_primes(Integer::from(11), Integer::from(13)).unwrap()
    }

    #[test]
    fn encodes_positive_and_negative() {
        let sk = toy();
        let pk = sk.public_key();
        // 1.5 * 2^4 = 24
        let e = encode(1.5f64, -4, pk).unwrap();
        assert_eq!(e.mantissa, 24);
        assert_eq!(decode::<f64>(&e, pk).unwrap(), 1.5);
        // -1.5 -> -24 mod 143 = 119, above max_number = 71
        let e = encode(-1.5f64, -4, pk).unwrap();
        assert_eq!(e.mantissa, 119);
        assert_eq!(decode::<f64>(&e, pk).unwrap(), -1.5);
        // zero stays zero at any exponent
        for exp in [-40i64, -4, 0, 4] {
            assert_eq!(encode(0.0f64, exp, pk).unwrap().mantissa, 0);
        }
    }

    #[test]
    fn dead_zone_rejected() {
        let pk = toy().public_key().clone();
        // decodable iff mantissa < 71 or mantissa > 72
        for m in [71u32, 72] {
            let e = EncodedNumber {
                mantissa: Integer::from(m),
                exponent: -4,
            };
            assert!(matches!(decode::<f64>(&e, &pk), Err(PaillierError::DeadZone)));
        }
        let ok = EncodedNumber {
            mantissa: Integer::from(73),
            exponent: 0,
        };
        assert_eq!(decode::<f64>(&ok, &pk).unwrap(), -70.0);
    }

    #[test]
    fn overflow_rejected() {
        let pk = toy().public_key().clone();
        // toy key: limit falls back to max_number = 71
        assert_eq!(encode_limit(&pk), 71);
        assert!(encode(71.0f64, 0, &pk).is_err());
        assert!(encode(-71.0f64, 0, &pk).is_err());
        assert!(encode(70.0f64, 0, &pk).is_ok());
        assert!(encode(f64::NAN, 0, &pk).is_err());
    }

    #[test]
    fn big_key_reserves_headroom() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let (pk, _) = crate::keys::keygen_with_rng(64, &mut rng).unwrap();
        let limit = encode_limit(&pk);
        assert_eq!(limit, Integer::from(pk.max_number() >> 20));
        assert!(limit > 0);
    }

    #[test]
    fn encrypted_roundtrip_preserves_exponent() {
        let sk = toy();
        let pk = sk.public_key();
        let mut rng = ChaCha20Rng::seed_from_u64(22);
        let e = encode(-2.25f64, -4, pk).unwrap();
        let c = encrypt_encoded(pk, &e, &mut rng).unwrap();
        assert_eq!(c.exponent(), -4);
        let back = decrypt_encoded(&sk, &c).unwrap();
        assert_eq!(back, e);
        assert_eq!(decode::<f64>(&back, pk).unwrap(), -2.25);
    }

    #[test]
    fn homomorphic_sum_is_exact_fixed_point() {
        let sk = toy();
        let pk = sk.public_key();
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        // 1.5 + (-0.5) = 1.0 exactly at exponent -4
        let a = encrypt_encoded(pk, &encode(1.5f64, -4, pk).unwrap(), &mut rng).unwrap();
        let b = encrypt_encoded(pk, &encode(-0.5f64, -4, pk).unwrap(), &mut rng).unwrap();
        let sum = pk.add_cipher(&a, &b).unwrap();
        let decoded: f64 = decode(&decrypt_encoded(&sk, &sum).unwrap(), pk).unwrap();
        assert_eq!(decoded, 1.0);
    }

    #[test]
    fn homomorphic_subtraction_via_negation() {
        let sk = toy();
        let pk = sk.public_key();
        let mut rng = ChaCha20Rng::seed_from_u64(24);
        // 1.25 - 3.0 = -1.75 exactly
        let a = encrypt_encoded(pk, &encode(1.25f64, -4, pk).unwrap(), &mut rng).unwrap();
        let b = encrypt_encoded(pk, &encode(3.0f64, -4, pk).unwrap(), &mut rng).unwrap();
        let neg_one = Integer::from(pk.n() - 1);
        let diff = pk.add_cipher(&a, &pk.mul_plain(&b, &neg_one).unwrap()).unwrap();
        let decoded: f64 = decode(&decrypt_encoded(&sk, &diff).unwrap(), pk).unwrap();
        assert_eq!(decoded, -1.75);
    }
}
