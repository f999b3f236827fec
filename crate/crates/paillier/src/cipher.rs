//! Encryption, decryption, and the homomorphic ciphertext operations:
//! ciphertext-ciphertext addition, plaintext addition, and plaintext
//! multiplication.

use rand::RngCore;
use rug::ops::RemRounding;
use rug::Integer;

use crate::error::{PaillierError, Result};
use crate::keys::{PaillierPublicKey, PaillierSecretKey};
use crate::rnd::random_unit;

/// An encrypted value together with the fixed-point exponent of its
/// plaintext. Integer-level encryption uses exponent 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    value: Integer,
    exponent: i64,
}

impl Ciphertext {
    /// Wraps a raw ciphertext value, validating it lies in `[0, n^2)`.
    pub fn from_parts(value: Integer, exponent: i64, pk: &PaillierPublicKey) -> Result<Self> {
        if value < 0 || value >= *pk.n_squared() {
            return Err(PaillierError::CiphertextOutOfRange);
        }
        Ok(Self { value, exponent })
    }

    pub fn value(&self) -> &Integer {
        &self.value
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub(crate) fn with_exponent(mut self, exponent: i64) -> Self {
        self.exponent = exponent;
        self
    }

    /// Lowercase big-endian hex, zero-padded to the key's ciphertext width.
    pub fn to_hex(&self, pk: &PaillierPublicKey) -> String {
        let s = self.value.to_string_radix(16);
        format!("{:0>width$}", s, width = pk.cipher_hex_width())
    }

    pub fn from_hex(s: &str, exponent: i64, pk: &PaillierPublicKey) -> Result<Self> {
        let value = int_from_hex(s)?;
        Self::from_parts(value, exponent, pk)
    }
}

/// Lowercase big-endian hex of a non-negative integer (key material on the
/// wire).
pub fn int_to_hex(x: &Integer) -> String {
    x.to_string_radix(16)
}

pub fn int_from_hex(s: &str) -> Result<Integer> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(PaillierError::BadHex(s.chars().take(16).collect()));
    }
    Integer::parse_radix(s, 16)
        .map(Integer::from)
        .map_err(|_| PaillierError::BadHex(s.chars().take(16).collect()))
}

fn check_plaintext(pk: &PaillierPublicKey, m: &Integer) -> Result<()> {
    if *m < 0 || m >= pk.n() {
        return Err(PaillierError::PlaintextOutOfRange);
    }
    Ok(())
}

impl PaillierPublicKey {
    /// Encrypts `m in [0, n)` with fresh randomness: `c = g^m r^n (mod n^2)`.
    pub fn encrypt(&self, m: &Integer, rng: &mut dyn RngCore) -> Result<Ciphertext> {
        let r = random_unit(self.n(), rng);
        self.encrypt_with(m, &r)
    }

    /// Encrypts with caller-chosen randomness (worked examples and the
    /// op1/op2 consistency checks). `r` must lie in `(0, n)` and be coprime
    /// to `n`.
    pub fn encrypt_with(&self, m: &Integer, r: &Integer) -> Result<Ciphertext> {
        check_plaintext(self, m)?;
        if *r <= 0 || r >= self.n() || Integer::from(r.gcd_ref(self.n())) != 1 {
            return Err(PaillierError::BadRandomness);
        }
        // g = n + 1, so g^m = 1 + m n (mod n^2); m < n keeps 1 + m n < n^2.
        let gm = Integer::from(self.n() * m) + 1;
        let rn = r
            .clone()
            .pow_mod(self.n(), self.n_squared())
            .expect("positive modulus");
        let value = gm * rn % self.n_squared();
        Ok(Ciphertext { value, exponent: 0 })
    }

    /// op1: ciphertext product decrypts to the plaintext sum mod `n`.
    pub fn add_cipher(&self, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext> {
        if c1.exponent != c2.exponent {
            return Err(PaillierError::ExponentMismatch {
                left: c1.exponent,
                right: c2.exponent,
            });
        }
        let value = Integer::from(&c1.value * &c2.value) % self.n_squared();
        Ok(Ciphertext {
            value,
            exponent: c1.exponent,
        })
    }

    /// op2: multiplying by `g^m` adds the plaintext `m` (taken at the
    /// ciphertext's exponent).
    pub fn add_plain(&self, c: &Ciphertext, m: &Integer) -> Result<Ciphertext> {
        check_plaintext(self, m)?;
        let gm = Integer::from(self.n() * m) + 1;
        let value = gm * &c.value % self.n_squared();
        Ok(Ciphertext {
            value,
            exponent: c.exponent,
        })
    }

    /// op3: exponentiation by `k in [0, n)` decrypts to `m k (mod n)`.
    /// `k = n - 1` realizes homomorphic negation.
    pub fn mul_plain(&self, c: &Ciphertext, k: &Integer) -> Result<Ciphertext> {
        if *k < 0 || k >= self.n() {
            return Err(PaillierError::MultiplierOutOfRange);
        }
        let value = c
            .value
            .clone()
            .pow_mod(k, self.n_squared())
            .expect("positive modulus");
        Ok(Ciphertext {
            value,
            exponent: c.exponent,
        })
    }
}

fn check_ciphertext(sk: &PaillierSecretKey, c: &Ciphertext) -> Result<()> {
    let pk = sk.public_key();
    if c.value < 0 || c.value >= *pk.n_squared() {
        return Err(PaillierError::CiphertextOutOfRange);
    }
    if Integer::from(c.value.gcd_ref(pk.n())) != 1 {
        return Err(PaillierError::NotInvertible);
    }
    Ok(())
}

impl PaillierSecretKey {
    /// Decrypts via the textbook route: `L(c^lambda mod n^2) * mu (mod n)`
    /// with `L(x) = (x - 1) / n`.
    pub fn decrypt(&self, c: &Ciphertext) -> Result<Integer> {
        check_ciphertext(self, c)?;
        let pk = self.public_key();
        let x = c
            .value
            .clone()
            .pow_mod(self.lambda(), pk.n_squared())
            .expect("positive modulus");
        let l = (x - 1) / pk.n();
        Ok(l * self.mu() % pk.n())
    }

    /// CRT decryption on the half-size moduli; same result as [`Self::decrypt`].
    pub fn decrypt_crt(&self, c: &Ciphertext) -> Result<Integer> {
        check_ciphertext(self, c)?;
        let mp = {
            let cp = Integer::from(&c.value % &self.pp);
            let dp = cp
                .pow_mod(&Integer::from(self.p() - 1), &self.pp)
                .expect("positive modulus");
            (Integer::from(&dp - 1) / self.p()) * &self.hp % self.p()
        };
        let mq = {
            let cq = Integer::from(&c.value % &self.qq);
            let dq = cq
                .pow_mod(&Integer::from(self.q() - 1), &self.qq)
                .expect("positive modulus");
            (Integer::from(&dq - 1) / self.q()) * &self.hq % self.q()
        };
        let diff = Integer::from(&mq - &mp) * &self.p_inv_q;
        Ok(mp + self.p() * diff.rem_euc(self.q()))
    }

    /// CRT-assisted encryption: computes `r^n` on the half-size moduli with
    /// reduced exponents. Produces the exact ciphertext [`PaillierPublicKey::encrypt_with`]
    /// would for the same `(m, r)`.
    pub fn encrypt_crt(&self, m: &Integer, rng: &mut dyn RngCore) -> Result<Ciphertext> {
        let r = random_unit(self.public_key().n(), rng);
        self.encrypt_crt_with(m, &r)
    }

    pub fn encrypt_crt_with(&self, m: &Integer, r: &Integer) -> Result<Ciphertext> {
        let pk = self.public_key();
        check_plaintext(pk, m)?;
        if *r <= 0 || r >= pk.n() || Integer::from(r.gcd_ref(pk.n())) != 1 {
            return Err(PaillierError::BadRandomness);
        }
        let rp = Integer::from(r % &self.pp)
            .pow_mod(&self.exp_p, &self.pp)
            .expect("positive modulus");
        let rq = Integer::from(r % &self.qq)
            .pow_mod(&self.exp_q, &self.qq)
            .expect("positive modulus");
        let diff = Integer::from(&rq - &rp) * &self.pp_inv_qq;
        let rn = rp + Integer::from(&self.pp) * diff.rem_euc(&self.qq);
        let gm = Integer::from(pk.n() * m) + 1;
        let value = gm * rn % pk.n_squared();
        Ok(Ciphertext { value, exponent: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keys::keygen_with_rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> PaillierSecretKey {
        PaillierSecretKey::from_primes(Integer::from(5), Integer::from(7)).unwrap()
    }

    #[test]
    fn zero_with_unit_randomness_is_one() {
        let sk = toy();
        let c = sk
            .public_key()
            .encrypt_with(&Integer::from(0), &Integer::from(1))
            .unwrap();
        assert_eq!(*c.value(), 1);
        assert_eq!(sk.decrypt(&c).unwrap(), 0);
    }

    #[test]
    fn worked_encryption_matches_naive_modpow() {
        // Independent oracle: square-free schoolbook power loop.
        fn naive_pow_mod(base: u64, exp: u64, modulus: u64) -> u64 {
            let mut acc = 1u64;
            for _ in 0..exp {
                acc = acc * base % modulus;
            }
            acc
        }
        let sk = toy();
        let pk = sk.public_key();
        // c = g^3 * r^n mod n^2 with g = 36, r = 2, n = 35.
        let expected = naive_pow_mod(36, 3, 1225) * naive_pow_mod(2, 35, 1225) % 1225;
        let c = pk
            .encrypt_with(&Integer::from(3), &Integer::from(2))
            .unwrap();
        assert_eq!(*c.value(), expected);
        assert_eq!(sk.decrypt(&c).unwrap(), 3);
    }

    #[test]
    fn toy_roundtrip_exhaustive() {
        let sk = toy();
        let pk = sk.public_key();
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        for m in 0..35u32 {
            let c = pk.encrypt(&Integer::from(m), &mut rng).unwrap();
            assert_eq!(sk.decrypt(&c).unwrap(), m);
            assert_eq!(sk.decrypt_crt(&c).unwrap(), m);
        }
    }

    #[test]
    fn boundary_plaintexts() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let (pk, sk) = keygen_with_rng(64, &mut rng).unwrap();
        for m in [
            Integer::from(0),
            Integer::from(1),
            Integer::from(pk.n() - 1),
        ] {
            let c = pk.encrypt(&m, &mut rng).unwrap();
            assert_eq!(sk.decrypt(&c).unwrap(), m);
        }
        assert!(pk.encrypt(&pk.n().clone(), &mut rng).is_err());
        assert!(pk.encrypt(&Integer::from(-1), &mut rng).is_err());
    }

    #[test]
    fn probabilistic_encryption_differs() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let (pk, _) = keygen_with_rng(64, &mut rng).unwrap();
        let a = pk.encrypt(&Integer::from(9), &mut rng).unwrap();
        let b = pk.encrypt(&Integer::from(9), &mut rng).unwrap();
        assert_ne!(a.value(), b.value());
    }

    #[test]
    fn homomorphic_ops_on_toy_key() {
        let sk = toy();
        let pk = sk.public_key();
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let e2 = pk.encrypt(&Integer::from(2), &mut rng).unwrap();
        let e3 = pk.encrypt(&Integer::from(3), &mut rng).unwrap();
        // op1
        let sum = pk.add_cipher(&e2, &e3).unwrap();
        assert_eq!(sk.decrypt(&sum).unwrap(), 5);
        // additive identity
        let e0 = pk.encrypt(&Integer::from(0), &mut rng).unwrap();
        let same = pk.add_cipher(&e2, &e0).unwrap();
        assert_eq!(sk.decrypt(&same).unwrap(), 2);
        // wraparound mod n: 20 + 20 = 40 = 5 (mod 35)
        let e20 = pk.encrypt(&Integer::from(20), &mut rng).unwrap();
        let wrap = pk.add_cipher(&e20, &e20).unwrap();
        assert_eq!(sk.decrypt(&wrap).unwrap(), 5);
        // op2
        let plus3 = pk.add_plain(&e2, &Integer::from(3)).unwrap();
        assert_eq!(sk.decrypt(&plus3).unwrap(), 5);
        let plus0 = pk.add_plain(&e2, &Integer::from(0)).unwrap();
        assert_eq!(sk.decrypt(&plus0).unwrap(), 2);
        // op2 equals op1 against encrypt(m, r = 1)
        let e3_unit = pk.encrypt_with(&Integer::from(3), &Integer::from(1)).unwrap();
        let via_op1 = pk.add_cipher(&e2, &e3_unit).unwrap();
        assert_eq!(sk.decrypt(&via_op1).unwrap(), sk.decrypt(&plus3).unwrap());
        // op3
        let e7 = pk.encrypt(&Integer::from(7), &mut rng).unwrap();
        let times3 = pk.mul_plain(&e7, &Integer::from(3)).unwrap();
        assert_eq!(sk.decrypt(&times3).unwrap(), 21);
        let times1 = pk.mul_plain(&e7, &Integer::from(1)).unwrap();
        assert_eq!(sk.decrypt(&times1).unwrap(), 7);
        // k = n - 1 is the additive inverse
        let neg = pk.mul_plain(&e7, &Integer::from(34)).unwrap();
        assert_eq!(sk.decrypt(&neg).unwrap(), 28); // -7 mod 35
        assert!(pk.mul_plain(&e7, &Integer::from(35)).is_err());
    }

    #[test]
    fn exponent_mismatch_is_an_error() {
        let sk = toy();
        let pk = sk.public_key();
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let a = pk.encrypt(&Integer::from(1), &mut rng).unwrap();
        let b = pk
            .encrypt(&Integer::from(1), &mut rng)
            .unwrap()
            .with_exponent(-40);
        assert!(matches!(
            pk.add_cipher(&a, &b),
            Err(PaillierError::ExponentMismatch { .. })
        ));
    }

    #[test]
    fn crt_paths_match_plain_paths() {
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let (pk, sk) = keygen_with_rng(128, &mut rng).unwrap();
        for _ in 0..50 {
            let m = crate::rnd::random_below(pk.n(), &mut rng);
            let r = random_unit(pk.n(), &mut rng);
            let plain = pk.encrypt_with(&m, &r).unwrap();
            let crt = sk.encrypt_crt_with(&m, &r).unwrap();
            assert_eq!(plain, crt);
            assert_eq!(sk.decrypt(&plain).unwrap(), m);
            assert_eq!(sk.decrypt_crt(&plain).unwrap(), m);
        }
    }

    #[test]
    fn hex_roundtrip_is_padded() {
        let sk = toy();
        let pk = sk.public_key();
        let mut rng = ChaCha20Rng::seed_from_u64(16);
        let c = pk.encrypt(&Integer::from(3), &mut rng).unwrap();
        let hex = c.to_hex(pk);
        assert_eq!(hex.len(), pk.cipher_hex_width());
        let back = Ciphertext::from_hex(&hex, c.exponent(), pk).unwrap();
        assert_eq!(back, c);
        assert!(Ciphertext::from_hex("zz", 0, pk).is_err());
        // value >= n^2 rejected
        let too_big = int_to_hex(pk.n_squared());
        assert!(Ciphertext::from_hex(&too_big, 0, pk).is_err());
    }

    #[test]
    fn rejects_foreign_or_corrupt_ciphertexts() {
        let sk = toy();
        let pk = sk.public_key();
        // c >= n^2
        let c = Ciphertext {
            value: pk.n_squared().clone(),
            exponent: 0,
        };
        assert!(matches!(
            sk.decrypt(&c),
            Err(PaillierError::CiphertextOutOfRange)
        ));
        // gcd(c, n) != 1
        let c = Ciphertext {
            value: Integer::from(35),
            exponent: 0,
        };
        assert!(matches!(sk.decrypt(&c), Err(PaillierError::NotInvertible)));
    }
}
