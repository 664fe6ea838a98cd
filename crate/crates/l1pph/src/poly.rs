//! Dense polynomials over Z_p: truncated multiplication, division, power-series
//! inverse, and the extended Euclidean algorithm with a pluggable stopping
//! condition.
//!
//! Coefficient index `i` holds the coefficient of `z^i`. Polynomials are kept
//! normalized: no trailing zero coefficients, the zero polynomial is the empty
//! vector, and its degree is a distinguished [`Degree::NegInf`] marker so that
//! degree comparisons in stopping rules are total.

use crate::error::{Error, Result};
use crate::field::Fp;

/// Degree of a polynomial; the zero polynomial has degree `NegInf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Degree {
    NegInf,
    Of(usize),
}

impl Degree {
    /// The degree as a count of coefficients (degree + 1); zero for `NegInf`.
    pub fn coeff_len(self) -> usize {
        match self {
            Degree::NegInf => 0,
            Degree::Of(d) => d + 1,
        }
    }
}

/// A dense polynomial over Z_p, normalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<u64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly { coeffs: vec![1] }
    }

    pub fn constant(fp: &Fp, c: u64) -> Self {
        Poly::from_coeffs(fp, vec![c])
    }

    /// The monomial z^d.
    pub fn monomial(d: usize) -> Self {
        let mut coeffs = vec![0; d + 1];
        coeffs[d] = 1;
        Poly { coeffs }
    }

    /// Builds a polynomial from raw coefficients (constant term first),
    /// reducing each into the field and trimming trailing zeros.
    pub fn from_coeffs(fp: &Fp, mut coeffs: Vec<u64>) -> Self {
        for c in coeffs.iter_mut() {
            *c = fp.reduce(*c);
        }
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Degree {
        if self.coeffs.is_empty() {
            Degree::NegInf
        } else {
            Degree::Of(self.coeffs.len() - 1)
        }
    }

    /// Coefficient of z^i (zero beyond the stored length).
    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    /// Coefficients padded with zeros up to exactly `len` entries.
    pub fn coeffs_padded(&self, len: usize) -> Vec<u64> {
        let mut out = self.coeffs.clone();
        out.resize(len, 0);
        out
    }

    pub fn add(&self, fp: &Fp, other: &Poly) -> Poly {
        let mut coeffs = vec![0; self.coeffs.len().max(other.coeffs.len())];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = fp.add(self.coeff(i), other.coeff(i));
        }
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn sub(&self, fp: &Fp, other: &Poly) -> Poly {
        let mut coeffs = vec![0; self.coeffs.len().max(other.coeffs.len())];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = fp.sub(self.coeff(i), other.coeff(i));
        }
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn scale(&self, fp: &Fp, c: u64) -> Poly {
        let coeffs = self.coeffs.iter().map(|&a| fp.mul(a, c)).collect();
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    pub fn neg(&self, fp: &Fp) -> Poly {
        self.scale(fp, fp.neg(1))
    }

    /// Full schoolbook product, no truncation.
    pub fn mul(&self, fp: &Fp, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = fp.add(coeffs[i + j], fp.mul(a, b));
            }
        }
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    /// Product with all terms of degree > t discarded. Schoolbook, O(t^2).
    pub fn mul_mod_t(&self, fp: &Fp, other: &Poly, t: usize) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let out_len = (self.coeffs.len() + other.coeffs.len() - 1).min(t + 1);
        let mut coeffs = vec![0u64; out_len];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 || i >= out_len {
                continue;
            }
            let jmax = (out_len - i).min(other.coeffs.len());
            for (j, &b) in other.coeffs.iter().take(jmax).enumerate() {
                coeffs[i + j] = fp.add(coeffs[i + j], fp.mul(a, b));
            }
        }
        let mut p = Poly { coeffs };
        p.trim();
        p
    }

    /// Discards all terms of degree > t.
    pub fn truncate(&self, t: usize) -> Poly {
        let mut p = Poly {
            coeffs: self.coeffs.iter().take(t + 1).copied().collect(),
        };
        p.trim();
        p
    }

    /// Euclidean division: returns (q, r) with self = q*other + r and
    /// deg(r) < deg(other).
    pub fn divmod(&self, fp: &Fp, other: &Poly) -> Result<(Poly, Poly)> {
        if other.is_zero() {
            return Err(Error::DivideByZeroPoly);
        }
        let db = other.coeffs.len() - 1;
        if self.coeffs.len() <= db {
            return Ok((Poly::zero(), self.clone()));
        }
        let inv_lead = fp.inv(other.coeffs[db])?;
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0u64; rem.len() - db];
        for sh in (0..quot.len()).rev() {
            let c = fp.mul(rem[sh + db], inv_lead);
            if c == 0 {
                continue;
            }
            quot[sh] = c;
            for (i, &b) in other.coeffs.iter().enumerate() {
                rem[sh + i] = fp.sub(rem[sh + i], fp.mul(c, b));
            }
        }
        let mut q = Poly { coeffs: quot };
        q.trim();
        rem.truncate(db);
        let mut r = Poly { coeffs: rem };
        r.trim();
        Ok((q, r))
    }

    /// Power-series inverse: returns b with self * b = 1 (mod z^{t+1}).
    ///
    /// Obtained by running the EEA on (z^{t+1}, self) down to the constant
    /// remainder. Fails unless the constant term is a unit.
    pub fn inv_mod_t(&self, fp: &Fp, t: usize) -> Result<Poly> {
        if self.coeff(0) == 0 {
            return Err(Error::NotInvertible);
        }
        let a = self.truncate(t);
        let state = eea_until(fp, Poly::monomial(t + 1), a, |dr, _| dr < Degree::Of(1))?;
        let c = match state.r_cur.degree() {
            Degree::Of(0) => state.r_cur.coeff(0),
            _ => return Err(Error::NotInvertible),
        };
        // u_k * a = (-1)^k c (mod z^{t+1})
        let mut scale = fp.inv(c)?;
        if state.k % 2 == 1 {
            scale = fp.neg(scale);
        }
        Ok(state.u_cur.scale(fp, scale).truncate(t))
    }

    /// (1 - a_i z)^e truncated at degree t, by square-and-multiply.
    pub fn pow_linear_mod_t(fp: &Fp, a_i: u64, e: u64, t: usize) -> Poly {
        let base = Poly::from_coeffs(fp, vec![1, fp.neg(fp.reduce(a_i))]);
        let mut acc = Poly::one();
        let mut sq = base;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_mod_t(fp, &sq, t);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_mod_t(fp, &sq, t);
            }
        }
        acc
    }
}

/// State of the extended Euclidean algorithm after `k` division steps on
/// inputs (r_{-1}, r_0): the current and previous remainders together with the
/// cofactor sequences u and v satisfying
/// `(-1)^k (u_k r_0 - v_k r_{-1}) = r_k`.
#[derive(Debug, Clone)]
pub struct EeaState {
    pub r_prev: Poly,
    pub r_cur: Poly,
    pub u_prev: Poly,
    pub u_cur: Poly,
    pub v_prev: Poly,
    pub v_cur: Poly,
    pub k: usize,
}

impl EeaState {
    /// Degree of the quotient the next division step would produce,
    /// deg(r_{k-1}) - deg(r_k). `None` when a remainder is zero.
    pub fn next_quotient_degree(&self) -> Option<usize> {
        match (self.r_prev.degree(), self.r_cur.degree()) {
            (Degree::Of(a), Degree::Of(b)) => Some(a - b),
            _ => None,
        }
    }
}

/// Runs the EEA on (r_minus1, r_0), stopping at the first state where
/// `stop(deg r_k, deg r_{k-1})` holds. Requires deg(r_0) <= deg(r_{-1}).
///
/// Returns `StopNeverReached` if the remainder sequence is exhausted (r_k = 0)
/// without the condition firing, which signals a caller bug.
pub fn eea_until(
    fp: &Fp,
    r_minus1: Poly,
    r0: Poly,
    mut stop: impl FnMut(Degree, Degree) -> bool,
) -> Result<EeaState> {
    debug_assert!(r0.degree() <= r_minus1.degree());
    #[cfg(debug_assertions)]
    let (orig_rm1, orig_r0) = (r_minus1.clone(), r0.clone());

    let mut st = EeaState {
        r_prev: r_minus1,
        r_cur: r0,
        u_prev: Poly::zero(),
        u_cur: Poly::one(),
        v_prev: Poly::one(),
        v_cur: Poly::zero(),
        k: 0,
    };
    loop {
        if stop(st.r_cur.degree(), st.r_prev.degree()) {
            #[cfg(debug_assertions)]
            {
                let mut lhs = st.u_cur.mul(fp, &orig_r0).sub(fp, &st.v_cur.mul(fp, &orig_rm1));
                if st.k % 2 == 1 {
                    lhs = lhs.neg(fp);
                }
                debug_assert_eq!(lhs, st.r_cur, "EEA cofactor identity violated at stop");
            }
            return Ok(st);
        }
        if st.r_cur.is_zero() {
            return Err(Error::StopNeverReached);
        }
        let (q, r) = st.r_prev.divmod(fp, &st.r_cur)?;
        let u_next = st.u_prev.add(fp, &q.mul(fp, &st.u_cur));
        let v_next = st.v_prev.add(fp, &q.mul(fp, &st.v_cur));
        st.r_prev = std::mem::replace(&mut st.r_cur, r);
        st.u_prev = std::mem::replace(&mut st.u_cur, u_next);
        st.v_prev = std::mem::replace(&mut st.v_cur, v_next);
        st.k += 1;

        #[cfg(debug_assertions)]
        {
            // (-1)^k (u_k r_0 - v_k r_{-1}) = r_k. Verifying per iteration is
            // itself quadratic, so cap it for large inputs; those still get
            // the final-state verification below.
            if orig_rm1.coeffs().len() <= 512 {
                let mut lhs = st.u_cur.mul(fp, &orig_r0).sub(fp, &st.v_cur.mul(fp, &orig_rm1));
                if st.k % 2 == 1 {
                    lhs = lhs.neg(fp);
                }
                debug_assert_eq!(lhs, st.r_cur, "EEA cofactor identity violated at k={}", st.k);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp5() -> Fp {
        Fp::new(5)
    }

    #[test]
    fn degree_ordering_is_total() {
        assert!(Degree::NegInf < Degree::Of(0));
        assert!(Degree::Of(0) < Degree::Of(1));
        assert_eq!(Poly::zero().degree(), Degree::NegInf);
    }

    #[test]
    fn mul_mod_t_examples() {
        let f = fp5();
        // (1+z)(1+4z) mod z^2 = 1
        let a = Poly::from_coeffs(&f, vec![1, 1]);
        let b = Poly::from_coeffs(&f, vec![1, 4]);
        assert_eq!(a.mul_mod_t(&f, &b, 1), Poly::one());
        // (1-z)(1-4z) mod z^3 = 1 + 4z^2 over Z_5
        let a = Poly::from_coeffs(&f, vec![1, 4]);
        let b = Poly::from_coeffs(&f, vec![1, 1]);
        assert_eq!(a.mul_mod_t(&f, &b, 2).coeffs(), &[1, 0, 4]);
        // a * 1 truncates a
        let a = Poly::from_coeffs(&f, vec![1, 2, 3, 4]);
        assert_eq!(a.mul_mod_t(&f, &Poly::one(), 2), a.truncate(2));
    }

    #[test]
    fn divmod_examples() {
        let f = fp5();
        // z^2 / (z+1) = (z+4, 1)
        let a = Poly::monomial(2);
        let b = Poly::from_coeffs(&f, vec![1, 1]);
        let (q, r) = a.divmod(&f, &b).unwrap();
        assert_eq!(q.coeffs(), &[4, 1]);
        assert_eq!(r.coeffs(), &[1]);
        // a / a = (1, 0)
        let (q, r) = b.divmod(&f, &b).unwrap();
        assert_eq!(q, Poly::one());
        assert!(r.is_zero());
        // 0 / b = (0, 0)
        let (q, r) = Poly::zero().divmod(&f, &b).unwrap();
        assert!(q.is_zero() && r.is_zero());
        assert!(matches!(
            b.divmod(&f, &Poly::zero()),
            Err(Error::DivideByZeroPoly)
        ));
    }

    #[test]
    fn inv_mod_t_examples() {
        let f = fp5();
        let a = Poly::from_coeffs(&f, vec![1, 1]);
        assert_eq!(a.inv_mod_t(&f, 1).unwrap().coeffs(), &[1, 4]);
        assert_eq!(Poly::one().inv_mod_t(&f, 7).unwrap(), Poly::one());
        assert!(matches!(
            Poly::monomial(1).inv_mod_t(&f, 3),
            Err(Error::NotInvertible)
        ));
    }

    #[test]
    fn inv_mod_t_random_units_multiply_back() {
        use rand::{Rng, SeedableRng};
        let f = Fp::new(787);
        let t = 50;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let mut coeffs: Vec<u64> = (0..=t).map(|_| rng.gen_range(0..787)).collect();
            coeffs[0] = rng.gen_range(1..787);
            let a = Poly::from_coeffs(&f, coeffs);
            let inv = a.inv_mod_t(&f, t).unwrap();
            assert_eq!(a.mul_mod_t(&f, &inv, t), Poly::one());
        }
    }

    #[test]
    fn pow_linear_examples() {
        let f = fp5();
        assert_eq!(Poly::pow_linear_mod_t(&f, 3, 0, 9), Poly::one());
        // (1 - z)^2 = 1 + 3z + z^2 over Z_5
        assert_eq!(Poly::pow_linear_mod_t(&f, 1, 2, 4).coeffs(), &[1, 3, 1]);
        // e = 1 is the linear factor itself
        assert_eq!(Poly::pow_linear_mod_t(&f, 2, 1, 4).coeffs(), &[1, 3]);
    }

    #[test]
    fn eea_identical_inputs_case() {
        // r_{-1} = z^{t+1}, r_0 = 1: stop fires at k = 0 with u_0 = 1.
        let f = fp5();
        let t = 6usize;
        let tp = 3usize;
        let st = eea_until(&f, Poly::monomial(t + 1), Poly::one(), |dr, drp| {
            dr < Degree::Of(tp) && drp >= Degree::Of(tp)
        })
        .unwrap();
        assert_eq!(st.k, 0);
        assert_eq!(st.u_cur, Poly::one());
        assert_eq!(st.u_cur.degree(), Degree::Of(0));
    }

    #[test]
    fn eea_hand_run_terminates_with_identity() {
        let f = fp5();
        let rm1 = Poly::monomial(3);
        let r0 = Poly::from_coeffs(&f, vec![1, 0, 1]); // z^2 + 1
        let st = eea_until(&f, rm1.clone(), r0.clone(), |dr, _| dr < Degree::Of(1)).unwrap();
        // identity checked by the debug assertion; re-verify in release too
        let mut lhs = st.u_cur.mul(&f, &r0).sub(&f, &st.v_cur.mul(&f, &rm1));
        if st.k % 2 == 1 {
            lhs = lhs.neg(&f);
        }
        assert_eq!(lhs, st.r_cur);
    }

    #[test]
    fn eea_full_gcd_of_coprime_inputs_has_degree_zero() {
        let f = Fp::new(11);
        // coprime pair: z^5 and a unit power series
        let a = Poly::from_coeffs(&f, vec![3, 1, 4, 1, 5]);
        let st = eea_until(&f, Poly::monomial(5), a, |dr, _| dr < Degree::Of(1)).unwrap();
        assert_eq!(st.r_cur.degree(), Degree::Of(0));
    }

    #[test]
    fn eea_stop_never_reached_is_reported() {
        let f = fp5();
        let a = Poly::from_coeffs(&f, vec![1, 1]);
        let b = Poly::from_coeffs(&f, vec![1, 1]);
        let err = eea_until(&f, a, b, |_, _| false);
        assert!(matches!(err, Err(Error::StopNeverReached)));
    }
}
