//! Arithmetic in the prime field Z_p and deterministic prime selection.
//!
//! Residues are plain `u64` values kept canonical in `[0, p-1]`; the modulus
//! is carried by an [`Fp`] context rather than by each element.

use crate::error::{Error, Result};

/// Deterministic Miller-Rabin primality test, exact for all `u64` inputs.
///
/// Uses the known-sufficient witness set for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime strictly greater than `n`. Requires `n >= 2`.
pub fn next_prime(n: u64) -> u64 {
    assert!(n >= 2, "next_prime requires n >= 2");
    let mut c = n
        .checked_add(1)
        .expect("prime search overflowed the word size");
    if c % 2 == 0 {
        if c == 2 {
            return 2;
        }
        c += 1;
    }
    while !is_prime(c) {
        c = c
            .checked_add(2)
            .expect("prime search overflowed the word size");
    }
    c
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// A prime field context. All element operations reduce eagerly so residues
/// stay canonical in `[0, p-1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fp {
    p: u64,
}

impl Fp {
    /// Creates the field Z_p. Panics if `p` is not an odd prime >= 3.
    pub fn new(p: u64) -> Self {
        assert!(p >= 3 && is_prime(p), "modulus must be a prime >= 3");
        Fp { p }
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            self.p - (b - a)
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.p)
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    /// Reduces an arbitrary integer into the field.
    #[inline]
    pub fn reduce(&self, a: u64) -> u64 {
        a % self.p
    }

    /// Multiplicative inverse via the extended gcd on integers.
    pub fn inv(&self, a: u64) -> Result<u64> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let (mut r0, mut r1) = (self.p as i128, a as i128);
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        debug_assert_eq!(r0, 1, "modulus is prime so gcd must be 1");
        let mut s = s0 % self.p as i128;
        if s < 0 {
            s += self.p as i128;
        }
        Ok(s as u64)
    }

    pub fn pow(&self, base: u64, exp: u64) -> u64 {
        pow_mod(base, exp, self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_is_prime(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n % d == 0 {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn next_prime_examples() {
        assert_eq!(next_prime(10), 11);
        assert_eq!(next_prime(2), 3);
        assert_eq!(next_prime(784), 787);
    }

    #[test]
    fn next_prime_matches_trial_division() {
        for n in 2u64..5_000 {
            let p = next_prime(n);
            assert!(trial_division_is_prime(p), "{p} not prime");
            for c in n + 1..p {
                assert!(!trial_division_is_prime(c), "{c} skipped");
            }
        }
        // spot checks below 10^6
        for n in [9_973u64, 104_729, 499_979, 999_983, 150_528] {
            let p = next_prime(n);
            assert!(trial_division_is_prime(p));
        }
        assert_eq!(next_prime(999_983), 1_000_003);
    }

    #[test]
    fn small_ops() {
        let f = Fp::new(5);
        assert_eq!(f.mul(2, 3), 1);
        assert_eq!(f.add(4, 4), 3);
        assert_eq!(f.neg(0), 0);
        assert_eq!(f.inv(2).unwrap(), 3);
        assert_eq!(f.inv(1).unwrap(), 1);
        let f11 = Fp::new(11);
        assert_eq!(f11.inv(10).unwrap(), 10);
        assert!(matches!(f.inv(0), Err(Error::ZeroInverse)));
    }

    #[test]
    fn ring_axioms_exhaustive_small_p() {
        for p in [3u64, 5, 7, 11, 13] {
            let f = Fp::new(p);
            for a in 0..p {
                for b in 0..p {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.add(a, f.neg(a)), 0);
                    for c in 0..p {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                        assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_roundtrip_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0xF1E1D);
        let f = Fp::new(next_prime(1 << 20));
        for _ in 0..1000 {
            let a = rng.gen_range(1..f.modulus());
            assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
    }
}
