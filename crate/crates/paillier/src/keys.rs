//! Key generation and key material.
//!
//! The generator is fixed to `g = n + 1`, so `g^m = 1 + m n (mod n^2)` and
//! encryption needs a single modular exponentiation for `r^n`. The secret key
//! caches CRT residues; holders of `p` and `q` (the clients in this system)
//! encrypt and decrypt on the half-size moduli.

use rand::rngs::OsRng;
use rand::RngCore;
use rug::ops::RemRounding;
use rug::Integer;

use crate::error::{PaillierError, Result};
use crate::prime::{gen_prime, is_prime};

/// Public key: modulus `n` with cached `n^2`, `g = n + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaillierPublicKey {
    n: Integer,
    n_squared: Integer,
    g: Integer,
    key_bits: u32,
    max_number: Integer,
}

impl PaillierPublicKey {
    /// Builds the public key from a modulus (as received off the wire).
    pub fn from_n(n: Integer) -> Result<Self> {
        if n < 15 {
            return Err(PaillierError::ModulusTooSmall(n.to_string()));
        }
        let key_bits = n.significant_bits();
        let n_squared = Integer::from(&n * &n);
        let g = Integer::from(&n + 1);
        let max_number = Integer::from(&n >> 1);
        Ok(Self {
            n,
            n_squared,
            g,
            key_bits,
            max_number,
        })
    }

    pub fn n(&self) -> &Integer {
        &self.n
    }

    pub fn n_squared(&self) -> &Integer {
        &self.n_squared
    }

    pub fn g(&self) -> &Integer {
        &self.g
    }

    pub fn key_bits(&self) -> u32 {
        self.key_bits
    }

    /// Threshold between positive and negative plaintexts: `floor(n / 2)`.
    pub fn max_number(&self) -> &Integer {
        &self.max_number
    }

    /// Hex digits of a serialized ciphertext (zero-padded to the width of
    /// `n^2 - 1`, so lengths never leak magnitudes and byte counts are
    /// reproducible).
    pub fn cipher_hex_width(&self) -> usize {
        (self.n_squared.significant_bits() as usize).div_ceil(4)
    }
}

/// Secret key: the prime factors plus the decryption pair
/// `lambda = lcm(p-1, q-1)`, `mu = lambda^{-1} (mod n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaillierSecretKey {
    p: Integer,
    q: Integer,
    lambda: Integer,
    mu: Integer,
    pk: PaillierPublicKey,
    // CRT caches for half-size encrypt/decrypt.
    pub(crate) pp: Integer,
    pub(crate) qq: Integer,
    pub(crate) hp: Integer,
    pub(crate) hq: Integer,
    pub(crate) p_inv_q: Integer,
    pub(crate) pp_inv_qq: Integer,
    pub(crate) exp_p: Integer,
    pub(crate) exp_q: Integer,
}

impl PaillierSecretKey {
    /// Builds a key pair from explicit primes. This is also the hook tests
    /// use to inject tiny fixed primes for worked examples.
    pub fn from_primes(p: Integer, q: Integer) -> Result<Self> {
        let mut rng = OsRng;
        if !is_prime(&p, &mut rng) {
            return Err(PaillierError::NotPrime(p.to_string()));
        }
        if !is_prime(&q, &mut rng) {
            return Err(PaillierError::NotPrime(q.to_string()));
        }
        Self::from_primes_unchecked(p, q)
    }

    fn from_primes_unchecked(p: Integer, q: Integer) -> Result<Self> {
        if p == q {
            return Err(PaillierError::PrimesEqual);
        }
        let n = Integer::from(&p * &q);
        let pk = PaillierPublicKey::from_n(n.clone())?;
        let p_1 = Integer::from(&p - 1);
        let q_1 = Integer::from(&q - 1);
        let lambda = Integer::from(p_1.lcm_ref(&q_1));
        let mu = Integer::from(&lambda % &n)
            .invert(&n)
            .map_err(|_| PaillierError::NotInvertible)?;

        let pp = Integer::from(&p * &p);
        let qq = Integer::from(&q * &q);
        // h_x = L_x(g^{x-1} mod x^2)^{-1} mod x, and g^{x-1} = 1 - n (mod x^2).
        let hp = h_helper(&p, &pp, &n)?;
        let hq = h_helper(&q, &qq, &n)?;
        let p_inv_q = p
            .clone()
            .invert(&q)
            .map_err(|_| PaillierError::NotInvertible)?;
        let pp_inv_qq = pp
            .clone()
            .invert(&qq)
            .map_err(|_| PaillierError::NotInvertible)?;
        let exp_p = Integer::from(&n % (Integer::from(&pp - &p)));
        let exp_q = Integer::from(&n % (Integer::from(&qq - &q)));
        Ok(Self {
            p,
            q,
            lambda,
            mu,
            pk,
            pp,
            qq,
            hp,
            hq,
            p_inv_q,
            pp_inv_qq,
            exp_p,
            exp_q,
        })
    }

    pub fn p(&self) -> &Integer {
        &self.p
    }

    pub fn q(&self) -> &Integer {
        &self.q
    }

    pub fn lambda(&self) -> &Integer {
        &self.lambda
    }

    pub fn mu(&self) -> &Integer {
        &self.mu
    }

    pub fn public_key(&self) -> &PaillierPublicKey {
        &self.pk
    }
}

fn h_helper(x: &Integer, xx: &Integer, n: &Integer) -> Result<Integer> {
    let gx = Integer::from(1 - n).rem_euc(xx);
    let lx = Integer::from(&gx - 1) / x;
    lx.invert(x).map_err(|_| PaillierError::NotInvertible)
}

/// Generates a fresh key pair from OS randomness.
pub fn keygen(key_bits: u32) -> Result<(PaillierPublicKey, PaillierSecretKey)> {
    keygen_with_rng(key_bits, &mut OsRng)
}

/// Generates a fresh key pair from the supplied randomness source. The
/// primes get `key_bits / 2` bits each and regenerate until `n` has exactly
/// `key_bits` bits and `lambda` is invertible.
pub fn keygen_with_rng(
    key_bits: u32,
    rng: &mut dyn RngCore,
) -> Result<(PaillierPublicKey, PaillierSecretKey)> {
    if key_bits < 8 || key_bits % 2 != 0 {
        return Err(PaillierError::InvalidKeyBits(key_bits));
    }
    loop {
        let p = gen_prime(key_bits / 2, rng);
        let q = loop {
            let q = gen_prime(key_bits / 2, rng);
            if q != p {
                break q;
            }
        };
        if Integer::from(&p * &q).significant_bits() != key_bits {
            continue;
        }
        match PaillierSecretKey::from_primes_unchecked(p, q) {
            Ok(sk) => {
                let pk = sk.public_key().clone();
                return Ok((pk, sk));
            }
            Err(PaillierError::NotInvertible) => continue,
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn worked_toy_key() {
        // p = 5, q = 7: n = 35, n^2 = 1225, g = 36, lambda = lcm(4, 6) = 12.
        let sk = PaillierSecretKey::from_primes(Integer::from(5), Integer::from(7)).unwrap();
        let pk = sk.public_key();
        assert_eq!(*pk.n(), 35);
        assert_eq!(*pk.n_squared(), 1225);
        assert_eq!(*pk.g(), 36);
        assert_eq!(*sk.lambda(), 12);
        // mu = 12^{-1} mod 35 = 3
        assert_eq!(*sk.mu(), 3);
        assert_eq!(*pk.max_number(), 17);
    }

    #[test]
    fn rejects_bad_primes() {
        assert!(matches!(
            PaillierSecretKey::from_primes(Integer::from(6), Integer::from(7)),
            Err(PaillierError::NotPrime(_))
        ));
        assert!(matches!(
            PaillierSecretKey::from_primes(Integer::from(7), Integer::from(7)),
            Err(PaillierError::PrimesEqual)
        ));
        // 3 * 5 = 15 meets the floor; 3 * 3 rejected as equal; 2 * 3 too small
        assert!(matches!(
            PaillierSecretKey::from_primes(Integer::from(2), Integer::from(3)),
            Err(PaillierError::ModulusTooSmall(_))
        ));
    }

    #[test]
    fn keygen_exact_bits() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        for bits in [8u32, 16, 32, 64] {
            let (pk, sk) = keygen_with_rng(bits, &mut rng).unwrap();
            assert_eq!(pk.n().significant_bits(), bits);
            assert_eq!(Integer::from(sk.p() * sk.q()), *pk.n());
        }
    }

    #[test]
    fn keygen_rejects_bad_bits() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        assert!(keygen_with_rng(6, &mut rng).is_err());
        assert!(keygen_with_rng(9, &mut rng).is_err());
    }

    #[test]
    fn different_seeds_different_moduli() {
        let (pk1, _) = keygen_with_rng(64, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let (pk2, _) = keygen_with_rng(64, &mut ChaCha20Rng::seed_from_u64(2)).unwrap();
        assert_ne!(pk1.n(), pk2.n());
    }
}
