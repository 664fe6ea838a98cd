//! The property-preserving hash itself: key sampling, the sigma-polynomial
//! hash of a pixel vector, digest inversion for database storage, and the
//! truncated-EEA evaluation that decides the asymmetric l1-distance predicate
//! purely in the hash domain.
//!
//! A vector x over Z_q hashes to sigma_x(z) = prod_i (1 - a_i z)^{x_i} reduced
//! mod z^{t+1}, with coefficients in Z_p for a prime p > n and n distinct
//! nonzero evaluation points a_i. Evaluation multiplies one stored inverse
//! digest by a query digest and runs the extended Euclidean algorithm on
//! (z^{t+1}, product) until deg(r_k) < t_plus and deg(r_{k-1}) >= t_plus; the
//! degree of the cofactor u_k then decides the predicate.

use crate::error::{Error, Result};
use crate::field::{next_prime, Fp};
use crate::metrics::{PixelVector, PredicateParams};
use crate::poly::{eea_until, Degree, Poly};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// A sampled hash function: the prime p, the distinct nonzero evaluation
/// points, and the predicate parameters.
///
/// The a-vector may be absent (split-key storage); hashing then fails with
/// [`Error::MissingAVector`] while evaluation still works.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashKey {
    pub p: u64,
    pub a: Vec<u64>,
    pub n: usize,
    pub q: u32,
    pub params: PredicateParams,
    pub seed: u64,
}

impl HashKey {
    pub fn field(&self) -> Fp {
        Fp::new(self.p)
    }

    pub fn has_a(&self) -> bool {
        !self.a.is_empty()
    }

    /// Strips the evaluation points for split-key storage.
    pub fn without_a(&self) -> HashKey {
        HashKey {
            a: Vec::new(),
            ..self.clone()
        }
    }

    /// Digest length in field elements.
    pub fn digest_len(&self) -> usize {
        self.params.t as usize + 1
    }
}

/// A hashed vector: the t+1 coefficients of sigma_x mod z^{t+1},
/// constant term first. The constant term is always 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digest {
    pub coeffs: Vec<u64>,
}

/// The multiplicative inverse of a digest mod z^{t+1}; the form stored in
/// databases so that evaluation needs no inversion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InverseDigest {
    pub coeffs: Vec<u64>,
}

/// What the hash-domain evaluation observed at its stopping point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOutcome {
    pub matched: bool,
    pub deg_r_k: Degree,
    pub deg_u_k: usize,
    pub k: usize,
}

/// Samples a hash key: p is the first prime after n, and the evaluation
/// points are the first n entries of a seed-keyed shuffle of {1, ..., p-1}.
/// Deterministic for a fixed seed.
pub fn samp(seed: u64, n: usize, q: u32, params: PredicateParams) -> Result<HashKey> {
    if n == 0 {
        return Err(Error::ParamsInvalid("n must be >= 1".into()));
    }
    if q < 2 {
        return Err(Error::ParamsInvalid("q must be >= 2".into()));
    }
    if params.t_plus == 0 {
        return Err(Error::ParamsInvalid(
            "t_plus must be >= 1; the predicate is unsatisfiable otherwise".into(),
        ));
    }
    // PredicateParams::new already enforced t_plus + t_minus = t, delta <= t_minus.
    let p = next_prime((n as u64).max(2));
    let mut pool: Vec<u64> = (1..p).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for i in 0..n {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(n);
    Ok(HashKey {
        p,
        a: pool,
        n,
        q,
        params,
        seed,
    })
}

/// sigma over an explicit slice of evaluation points, truncated at degree t.
/// This is the per-block workhorse: callers pass matching slices of the
/// key's a-vector and of the flattened image.
pub fn hash_slice(fp: &Fp, a: &[u64], values: &[u32], t: u64) -> Result<Digest> {
    if a.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} evaluation points for {} values",
            a.len(),
            values.len()
        )));
    }
    let t = t as usize;
    let mut acc = Poly::one();
    for (&ai, &xi) in a.iter().zip(values) {
        if xi == 0 {
            continue;
        }
        let factor = Poly::pow_linear_mod_t(fp, ai, xi as u64, t);
        acc = acc.mul_mod_t(fp, &factor, t);
    }
    Ok(Digest {
        coeffs: acc.coeffs_padded(t + 1),
    })
}

/// Hashes a full vector under the key. O(n t^2).
pub fn hash(key: &HashKey, x: &PixelVector) -> Result<Digest> {
    if !key.has_a() {
        return Err(Error::MissingAVector);
    }
    if x.len() != key.n {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} but key expects {}",
            x.len(),
            key.n
        )));
    }
    if x.q() != key.q {
        return Err(Error::DimensionMismatch(format!(
            "vector alphabet {} but key expects {}",
            x.q(),
            key.q
        )));
    }
    hash_slice(&key.field(), &key.a, x.values(), key.params.t)
}

/// The untruncated sigma-polynomial of a vector; degree equals ||x||_1.
/// Used by oracles and the coefficient cross-checks.
pub fn sigma_untruncated(fp: &Fp, a: &[u64], values: &[u32]) -> Poly {
    let mut acc = Poly::one();
    for (&ai, &xi) in a.iter().zip(values) {
        let factor = Poly::from_coeffs(fp, vec![1, fp.neg(fp.reduce(ai))]);
        for _ in 0..xi {
            acc = acc.mul(fp, &factor);
        }
    }
    acc
}

/// Inverts a digest mod z^{t+1} for database storage.
pub fn invert_digest(key: &HashKey, d: &Digest) -> Result<InverseDigest> {
    invert_digest_with(&key.field(), d)
}

pub fn invert_digest_with(fp: &Fp, d: &Digest) -> Result<InverseDigest> {
    if d.coeffs.is_empty() || d.coeffs[0] == 0 {
        return Err(Error::NotInvertible);
    }
    let t = d.coeffs.len() - 1;
    let poly = Poly::from_coeffs(fp, d.coeffs.clone());
    let inv = poly.inv_mod_t(fp, t)?;
    Ok(InverseDigest {
        coeffs: inv.coeffs_padded(t + 1),
    })
}

/// Decides the predicate in the hash domain, given the stored inverse digest
/// of the reference vector and the digest of the query vector. O(t^2).
pub fn eval(key: &HashKey, inv_x: &InverseDigest, d_y: &Digest) -> Result<EvalOutcome> {
    eval_with(&key.field(), &key.params, inv_x, d_y)
}

/// Same as [`eval`] with explicit field and parameters (used per block).
pub fn eval_with(
    fp: &Fp,
    params: &PredicateParams,
    inv_x: &InverseDigest,
    d_y: &Digest,
) -> Result<EvalOutcome> {
    let len = params.t as usize + 1;
    if inv_x.coeffs.len() != len || d_y.coeffs.len() != len {
        return Err(Error::KeyMismatch(format!(
            "digest lengths {} and {} but t+1 = {len}",
            inv_x.coeffs.len(),
            d_y.coeffs.len()
        )));
    }
    let t = params.t as usize;
    let t_plus = params.t_plus as usize;
    let inv_poly = Poly::from_coeffs(fp, inv_x.coeffs.clone());
    let y_poly = Poly::from_coeffs(fp, d_y.coeffs.clone());
    let sigma_tilde = inv_poly.mul_mod_t(fp, &y_poly, t);
    if sigma_tilde.is_zero() {
        // digests are units, so a zero product means corrupted input
        return Err(Error::NotInvertible);
    }
    let state = eea_until(fp, Poly::monomial(t + 1), sigma_tilde, |dr, drp| {
        dr < Degree::Of(t_plus) && drp >= Degree::Of(t_plus)
    })?;
    let deg_u_k = match state.u_cur.degree() {
        Degree::Of(d) => d,
        Degree::NegInf => unreachable!("u_k is never zero"),
    };
    Ok(EvalOutcome {
        matched: deg_u_k as u64 + params.delta <= params.t_minus,
        deg_r_k: state.r_cur.degree(),
        deg_u_k,
        k: state.k,
    })
}

/// Byte width used for one field element on the wire: the smallest of
/// {2, 4, 8} that holds p - 1.
pub fn element_width(p: u64) -> usize {
    if p - 1 < (1 << 16) {
        2
    } else if p - 1 < (1 << 32) {
        4
    } else {
        8
    }
}

/// Appends coefficients as fixed-width little-endian integers.
pub fn write_elements(out: &mut Vec<u8>, coeffs: &[u64], width: usize) {
    for &c in coeffs {
        out.extend_from_slice(&c.to_le_bytes()[..width]);
    }
}

/// Reads `count` fixed-width little-endian field elements.
pub fn read_elements(bytes: &[u8], count: usize, width: usize) -> Result<(Vec<u64>, &[u8])> {
    let need = count * width;
    if bytes.len() < need {
        return Err(Error::FormatError(format!(
            "expected {need} bytes of coefficients, found {}",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(count);
    for chunk in bytes[..need].chunks_exact(width) {
        let mut buf = [0u8; 8];
        buf[..width].copy_from_slice(chunk);
        out.push(u64::from_le_bytes(buf));
    }
    Ok((out, &bytes[need..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{dotdiv, norm_l1, predicate_as};

    fn pv(values: &[u32], q: u32) -> PixelVector {
        PixelVector::new(values.to_vec(), q).unwrap()
    }

    #[test]
    fn samp_is_deterministic_and_distinct() {
        let params = PredicateParams::symmetric(10, 3).unwrap();
        let k1 = samp(99, 10, 5, params).unwrap();
        let k2 = samp(99, 10, 5, params).unwrap();
        assert_eq!(k1, k2);
        assert_eq!(k1.p, 11);
        assert_eq!(k1.a.len(), 10);
        let mut sorted = k1.a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 10, "a must be distinct");
        assert!(k1.a.iter().all(|&v| v >= 1 && v < 11));
        let k3 = samp(100, 10, 5, params).unwrap();
        assert_ne!(k1.a, k3.a);
    }

    #[test]
    fn samp_larger_n() {
        let params = PredicateParams::symmetric(78, 3).unwrap();
        let k = samp(1, 784, 256, params).unwrap();
        assert_eq!(k.p, 787);
    }

    #[test]
    fn samp_rejects_bad_params() {
        let p = PredicateParams::new(4, 0, 4, 0).unwrap();
        assert!(samp(0, 4, 4, p).is_err());
    }

    #[test]
    fn hash_worked_example() {
        // key (p=5, a=(1,2,3,4), t=2), x=(1,0,0,1) -> [1,0,4]
        let key = HashKey {
            p: 5,
            a: vec![1, 2, 3, 4],
            n: 4,
            q: 5,
            params: PredicateParams::new(2, 1, 1, 0).unwrap(),
            seed: 0,
        };
        let d = hash(&key, &pv(&[1, 0, 0, 1], 5)).unwrap();
        assert_eq!(d.coeffs, vec![1, 0, 4]);
        // zero vector hashes to the constant 1
        let d0 = hash(&key, &pv(&[0, 0, 0, 0], 5)).unwrap();
        assert_eq!(d0.coeffs, vec![1, 0, 0]);
    }

    #[test]
    fn first_coefficient_is_minus_weighted_sum() {
        use rand::{Rng, SeedableRng};
        let params = PredicateParams::symmetric(16, 2).unwrap();
        let key = samp(5, 12, 8, params).unwrap();
        let fp = key.field();
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        for _ in 0..50 {
            let x = pv(
                &(0..12).map(|_| rng.gen_range(0..8u32)).collect::<Vec<_>>(),
                8,
            );
            let d = hash(&key, &x).unwrap();
            assert_eq!(d.coeffs[0], 1);
            let mut s = 0u64;
            for (&ai, &xi) in key.a.iter().zip(x.values()) {
                s = fp.add(s, fp.mul(ai, xi as u64));
            }
            assert_eq!(d.coeffs[1], fp.neg(s));
        }
    }

    #[test]
    fn invert_digest_roundtrip() {
        let params = PredicateParams::symmetric(20, 0).unwrap();
        let key = samp(3, 30, 16, params).unwrap();
        let fp = key.field();
        let x = pv(&(0..30).map(|i| (i * 7 % 16) as u32).collect::<Vec<_>>(), 16);
        let d = hash(&key, &x).unwrap();
        let inv = invert_digest(&key, &d).unwrap();
        let a = Poly::from_coeffs(&fp, d.coeffs.clone());
        let b = Poly::from_coeffs(&fp, inv.coeffs.clone());
        assert_eq!(a.mul_mod_t(&fp, &b, 20), Poly::one());
        // identity digest inverts to itself
        let mut one = vec![0u64; 21];
        one[0] = 1;
        let inv1 = invert_digest(&key, &Digest { coeffs: one.clone() }).unwrap();
        assert_eq!(inv1.coeffs, one);
    }

    #[test]
    fn eval_identical_vectors_match() {
        let params = PredicateParams::symmetric(10, 3).unwrap();
        let key = samp(21, 10, 5, params).unwrap();
        let x = pv(&[0, 1, 2, 3, 4, 0, 1, 2, 3, 4], 5);
        let d = hash(&key, &x).unwrap();
        let inv = invert_digest(&key, &d).unwrap();
        let out = eval(&key, &inv, &d).unwrap();
        assert!(out.matched);
        assert_eq!(out.k, 0);
        assert_eq!(out.deg_u_k, 0);
    }

    #[test]
    fn eval_worked_pair_matches_oracle() {
        // x=(2,1,0,4), y=(3,0,1,4), a=(1,2,3,4), p=5, params (5,3,2,0)
        let params = PredicateParams::new(5, 3, 2, 0).unwrap();
        let key = HashKey {
            p: 5,
            a: vec![1, 2, 3, 4],
            n: 4,
            q: 5,
            params,
            seed: 0,
        };
        let x = pv(&[2, 1, 0, 4], 5);
        let y = pv(&[3, 0, 1, 4], 5);
        assert!(predicate_as(&x, &y, &params).unwrap());
        let inv_x = invert_digest(&key, &hash(&key, &x).unwrap()).unwrap();
        let d_y = hash(&key, &y).unwrap();
        let out = eval(&key, &inv_x, &d_y).unwrap();
        assert!(out.matched);
        // the recovered degrees are exactly the one-sided distances
        assert_eq!(out.deg_r_k, Degree::Of(2));
        assert_eq!(out.deg_u_k, 1);
        assert_eq!(norm_l1(&dotdiv(&y, &x).unwrap()), 2);
        assert_eq!(norm_l1(&dotdiv(&x, &y).unwrap()), 1);
    }

    #[test]
    fn eval_rejects_length_mismatch() {
        let params = PredicateParams::symmetric(10, 0).unwrap();
        let key = samp(21, 10, 5, params).unwrap();
        let x = pv(&[1; 10], 5);
        let d = hash(&key, &x).unwrap();
        let inv = invert_digest(&key, &d).unwrap();
        let short = Digest {
            coeffs: d.coeffs[..5].to_vec(),
        };
        assert!(matches!(
            eval(&key, &inv, &short),
            Err(Error::KeyMismatch(_))
        ));
    }

    #[test]
    fn untruncated_sigma_degree_is_l1_norm() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n = rng.gen_range(1..=5usize);
            let q = rng.gen_range(2..=4u32);
            let params = PredicateParams::symmetric(4, 0).unwrap();
            let key = samp(rng.gen(), n, q, params).unwrap();
            let fp = key.field();
            let x: Vec<u32> = (0..n).map(|_| rng.gen_range(0..q)).collect();
            let sigma = sigma_untruncated(&fp, &key.a, &x);
            let l1: u64 = x.iter().map(|&v| v as u64).sum();
            assert_eq!(sigma.degree(), Degree::Of(l1 as usize));
        }
    }

    #[test]
    fn wire_roundtrip() {
        assert_eq!(element_width(787), 2);
        assert_eq!(element_width(1 << 17), 4);
        assert_eq!(element_width(u64::MAX), 8);
        let coeffs = vec![1u64, 0, 65_535, 12_345];
        let mut buf = Vec::new();
        write_elements(&mut buf, &coeffs, 2);
        assert_eq!(buf.len(), 8);
        let (back, rest) = read_elements(&buf, 4, 2).unwrap();
        assert_eq!(back, coeffs);
        assert!(rest.is_empty());
        assert!(read_elements(&buf, 5, 2).is_err());
    }
}
