//! Big-integer sampling from any [`RngCore`] source.
//!
//! Callers supply the randomness source, so concurrent users instantiate one
//! generator each and seeded runs stay reproducible.

use rand::RngCore;
use rug::integer::Order;
use rug::Integer;

/// Uniform integer with exactly `bits` significant bits (top bit set).
pub fn random_exact_bits(bits: u32, rng: &mut dyn RngCore) -> Integer {
    assert!(bits >= 2, "need at least 2 bits");
    let nbytes = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; nbytes];
    rng.fill_bytes(&mut buf);
    let extra = nbytes as u32 * 8 - bits;
    buf[0] &= 0xffu8 >> extra;
    buf[0] |= 0x80u8 >> extra;
    Integer::from_digits(&buf, Order::MsfBe)
}

/// Uniform integer in `[0, bound)` by rejection sampling.
pub fn random_below(bound: &Integer, rng: &mut dyn RngCore) -> Integer {
    assert!(*bound > 0, "bound must be positive");
    let bits = bound.significant_bits();
    let nbytes = bits.div_ceil(8) as usize;
    let extra = nbytes as u32 * 8 - bits;
    let mut buf = vec![0u8; nbytes];
    loop {
        rng.fill_bytes(&mut buf);
        buf[0] &= 0xffu8 >> extra;
        let candidate = Integer::from_digits(&buf, Order::MsfBe);
        if candidate < *bound {
            return candidate;
        }
    }
}

/// Uniform integer in `(0, n)` coprime to `n` (encryption randomness).
pub fn random_unit(n: &Integer, rng: &mut dyn RngCore) -> Integer {
    loop {
        let r = random_below(n, rng);
        if r != 0 && Integer::from(r.gcd_ref(n)) == 1 {
            return r;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn exact_bits_sets_top_bit() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for bits in [2u32, 4, 7, 8, 9, 64, 127, 256] {
            for _ in 0..20 {
                let x = random_exact_bits(bits, &mut rng);
                assert_eq!(x.significant_bits(), bits);
            }
        }
    }

    #[test]
    fn below_respects_bound() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let bound = Integer::from(1000);
        for _ in 0..200 {
            let x = random_below(&bound, &mut rng);
            assert!(x < bound);
        }
    }

    #[test]
    fn unit_is_coprime() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let n = Integer::from(35);
        for _ in 0..50 {
            let r = random_unit(&n, &mut rng);
            assert!(r > 0 && r < n);
            assert_eq!(Integer::from(r.gcd_ref(&n)), 1);
        }
    }
}
