//! Probable-prime generation: small-prime sieve plus Miller-Rabin with 64
//! random-base rounds.

use rand::RngCore;
use rug::Integer;

use crate::rnd::{random_below, random_exact_bits};

const MILLER_RABIN_ROUNDS: u32 = 64;

const SMALL_PRIMES: &[u32] = &[
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Miller-Rabin probable-prime test with random bases.
pub fn is_prime(n: &Integer, rng: &mut dyn RngCore) -> bool {
    if *n < 2 {
        return false;
    }
    if *n == 2 {
        return true;
    }
    if n.is_even() {
        return false;
    }
    for &p in SMALL_PRIMES {
        let p = Integer::from(p);
        if *n == p {
            return true;
        }
        if Integer::from(n % &p) == 0 {
            return false;
        }
    }
    // n - 1 = 2^s * d with d odd
    let n_minus_1 = Integer::from(n - 1);
    let s = n_minus_1.find_one(0).expect("n > 1 is odd");
    let d = Integer::from(&n_minus_1 >> s);
    let span = Integer::from(n - 3); // witnesses drawn from [2, n - 2]
    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let a: Integer = random_below(&span, rng) + 2u32;
        let mut x = a.pow_mod(&d, n).expect("modulus > 0");
        if x == 1 || x == n_minus_1 {
            continue 'witness;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.pow_mod(&Integer::from(2), n).expect("modulus > 0");
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Random probable prime with exactly `bits` significant bits.
pub fn gen_prime(bits: u32, rng: &mut dyn RngCore) -> Integer {
    assert!(bits >= 2, "prime needs at least 2 bits");
    loop {
        let mut candidate = random_exact_bits(bits, rng);
        candidate.set_bit(0, true);
        if is_prime(&candidate, rng) {
            return candidate;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn known_primes_and_composites() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for p in [2u64, 3, 5, 7, 11, 13, 257, 65537, 2147483647] {
            assert!(is_prime(&Integer::from(p), &mut rng), "{p} is prime");
        }
        for c in [1u64, 4, 9, 15, 35, 561, 41041, 25326001, 3215031751] {
            // includes Carmichael numbers 561, 41041, and strong pseudoprime bases
            assert!(!is_prime(&Integer::from(c), &mut rng), "{c} is composite");
        }
    }

    #[test]
    fn generated_primes_have_exact_bits() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for bits in [4u32, 8, 16, 64, 128] {
            let p = gen_prime(bits, &mut rng);
            assert_eq!(p.significant_bits(), bits);
            assert!(is_prime(&p, &mut rng));
        }
    }
}
