//! Property tests at a working key size: roundtrips, the three homomorphic
//! operations, and signed fixed-point arithmetic through the full
//! encode-encrypt-add-decrypt-decode pipeline.

use fedmf_paillier::{
    decode, decrypt_encoded, encode, encrypt_encoded, keygen_with_rng, Integer, PaillierPublicKey,
    PaillierSecretKey,
};
use once_cell::sync::Lazy;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

static KEY: Lazy<(PaillierPublicKey, PaillierSecretKey)> =
    Lazy::new(|| keygen_with_rng(256, &mut ChaCha20Rng::seed_from_u64(0xfed)).unwrap());

fn to_int(x: u128) -> Integer {
    Integer::from(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn roundtrip(m in any::<u128>(), seed in any::<u64>()) {
        let (pk, sk) = &*KEY;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m = to_int(m);
        let c = pk.encrypt(&m, &mut rng).unwrap();
        prop_assert_eq!(sk.decrypt(&c).unwrap(), m.clone());
        prop_assert_eq!(sk.decrypt_crt(&c).unwrap(), m);
    }

    #[test]
    fn additive_homomorphism(m1 in any::<u128>(), m2 in any::<u128>(), seed in any::<u64>()) {
        let (pk, sk) = &*KEY;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (m1, m2) = (to_int(m1), to_int(m2));
        let c = pk.add_cipher(
            &pk.encrypt(&m1, &mut rng).unwrap(),
            &pk.encrypt(&m2, &mut rng).unwrap(),
        ).unwrap();
        let want = Integer::from(&m1 + &m2) % pk.n();
        prop_assert_eq!(sk.decrypt(&c).unwrap(), want);
    }

    #[test]
    fn plaintext_addition(m1 in any::<u128>(), m2 in any::<u128>(), seed in any::<u64>()) {
        let (pk, sk) = &*KEY;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (m1, m2) = (to_int(m1), to_int(m2));
        let c = pk.add_plain(&pk.encrypt(&m1, &mut rng).unwrap(), &m2).unwrap();
        let want = Integer::from(&m1 + &m2) % pk.n();
        prop_assert_eq!(sk.decrypt(&c).unwrap(), want);
    }

    #[test]
    fn plaintext_multiplication(m in any::<u128>(), k in any::<u64>(), seed in any::<u64>()) {
        let (pk, sk) = &*KEY;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (m, k) = (to_int(m), Integer::from(k));
        let c = pk.mul_plain(&pk.encrypt(&m, &mut rng).unwrap(), &k).unwrap();
        let want = m * k % pk.n();
        prop_assert_eq!(sk.decrypt(&c).unwrap(), want);
    }

    #[test]
    fn homomorphic_subtraction(m1 in any::<i32>(), m2 in any::<i32>(), seed in any::<u64>()) {
        let (pk, sk) = &*KEY;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let a = encrypt_encoded(pk, &encode(m1 as f64, 0, pk).unwrap(), &mut rng).unwrap();
        let b = encrypt_encoded(pk, &encode(m2 as f64, 0, pk).unwrap(), &mut rng).unwrap();
        let neg = pk.mul_plain(&b, &Integer::from(pk.n() - 1)).unwrap();
        let diff = pk.add_cipher(&a, &neg).unwrap();
        let got: f64 = decode(&decrypt_encoded(sk, &diff).unwrap(), pk).unwrap();
        prop_assert_eq!(got, m1 as f64 - m2 as f64);
    }

    #[test]
    fn fixed_point_roundtrip(x in -1e9f64..1e9, seed in any::<u64>()) {
        let (pk, sk) = &*KEY;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let exponent = -40;
        let e = encode(x, exponent, pk).unwrap();
        let c = encrypt_encoded(pk, &e, &mut rng).unwrap();
        let got: f64 = decode(&decrypt_encoded(sk, &c).unwrap(), pk).unwrap();
        // round-off is at most half an ulp of the fixed-point scale
        prop_assert!((got - x).abs() <= 2f64.powi(-41), "{} vs {}", got, x);
    }

    #[test]
    fn fixed_point_sums_are_exact(
        a in -1_000_000i64..1_000_000,
        b in -1_000_000i64..1_000_000,
        seed in any::<u64>(),
    ) {
        // dyadic inputs at scale 2^-20 encode exactly at exponent -40
        let (pk, sk) = &*KEY;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let x = a as f64 / 2f64.powi(20);
        let y = b as f64 / 2f64.powi(20);
        let ca = encrypt_encoded(pk, &encode(x, -40, pk).unwrap(), &mut rng).unwrap();
        let cb = encrypt_encoded(pk, &encode(y, -40, pk).unwrap(), &mut rng).unwrap();
        let sum = pk.add_cipher(&ca, &cb).unwrap();
        let got: f64 = decode(&decrypt_encoded(sk, &sum).unwrap(), pk).unwrap();
        prop_assert_eq!(got, x + y);
    }
}

#[test]
fn repeated_encryptions_are_distinct() {
    let (pk, _) = &*KEY;
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    let m = Integer::from(424242);
    let mut seen = std::collections::HashSet::new();
    for _ in 0..50 {
        let c = pk.encrypt(&m, &mut rng).unwrap();
        assert!(seen.insert(c.value().clone()), "ciphertext repeated");
    }
}
