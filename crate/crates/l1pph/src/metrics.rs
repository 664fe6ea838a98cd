//! Vector metrics and the reference predicate oracle: dotdiv, the l0/l1/l2/linf
//! norms, the normalized asymmetric l1-distance, and the asymmetric predicate
//! evaluated directly on pixel vectors. This module is the ground truth that
//! the hash-domain evaluation is checked against.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A vector over Z_q: `values[i] < q` for all i, and `n >= 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelVector {
    values: Vec<u32>,
    q: u32,
}

impl PixelVector {
    pub fn new(values: Vec<u32>, q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::ParamsInvalid("alphabet size q must be >= 2".into()));
        }
        if values.is_empty() {
            return Err(Error::ParamsInvalid("vector must have n >= 1".into()));
        }
        if let Some(v) = values.iter().find(|&&v| v >= q) {
            return Err(Error::ParamsInvalid(format!("value {v} not below q={q}")));
        }
        Ok(PixelVector { values, q })
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_compatible(&self, other: &PixelVector) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        if self.q != other.q {
            return Err(Error::DimensionMismatch(format!(
                "alphabets {} and {}",
                self.q, other.q
            )));
        }
        Ok(())
    }
}

/// Element-wise one-sided difference: result_i = max(0, x_i - y_i).
pub fn dotdiv(x: &PixelVector, y: &PixelVector) -> Result<PixelVector> {
    x.check_compatible(y)?;
    let values = x
        .values
        .iter()
        .zip(&y.values)
        .map(|(&a, &b)| a.saturating_sub(b))
        .collect();
    Ok(PixelVector { values, q: x.q })
}

/// Which norm to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L0,
    L1,
    L2,
    Linf,
}

pub fn norm_l0(x: &PixelVector) -> u64 {
    x.values.iter().filter(|&&v| v != 0).count() as u64
}

pub fn norm_l1(x: &PixelVector) -> u64 {
    x.values.iter().map(|&v| v as u64).sum()
}

/// Exact squared Euclidean norm; the l2 norm itself is its floating root.
pub fn norm_l2_squared(x: &PixelVector) -> u64 {
    x.values.iter().map(|&v| (v as u64) * (v as u64)).sum()
}

pub fn norm_linf(x: &PixelVector) -> u64 {
    x.values.iter().map(|&v| v as u64).max().unwrap_or(0)
}

pub fn norm(x: &PixelVector, kind: NormKind) -> f64 {
    match kind {
        NormKind::L0 => norm_l0(x) as f64,
        NormKind::L1 => norm_l1(x) as f64,
        NormKind::L2 => (norm_l2_squared(x) as f64).sqrt(),
        NormKind::Linf => norm_linf(x) as f64,
    }
}

/// Exact l1 distance between two vectors.
pub fn dist_l1(x: &PixelVector, y: &PixelVector) -> Result<u64> {
    x.check_compatible(y)?;
    Ok(x.values
        .iter()
        .zip(&y.values)
        .map(|(&a, &b)| (a.max(b) - a.min(b)) as u64)
        .sum())
}

/// Exact squared l2 distance between two vectors.
pub fn dist_l2_squared(x: &PixelVector, y: &PixelVector) -> Result<u64> {
    x.check_compatible(y)?;
    Ok(x.values
        .iter()
        .zip(&y.values)
        .map(|(&a, &b)| {
            let d = (a.max(b) - a.min(b)) as u64;
            d * d
        })
        .sum())
}

/// Parameters of the asymmetric l1-distance predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateParams {
    pub t: u64,
    pub t_plus: u64,
    pub t_minus: u64,
    pub delta: u64,
}

impl PredicateParams {
    pub fn new(t: u64, t_plus: u64, t_minus: u64, delta: u64) -> Result<Self> {
        if t_plus + t_minus != t {
            return Err(Error::ParamsInvalid(format!(
                "t_plus + t_minus = {} but t = {t}",
                t_plus + t_minus
            )));
        }
        if delta > t_minus {
            return Err(Error::ParamsInvalid(format!(
                "delta = {delta} exceeds t_minus = {t_minus}"
            )));
        }
        Ok(PredicateParams {
            t,
            t_plus,
            t_minus,
            delta,
        })
    }

    /// The half/half split t_plus = t_minus = t/2; t must be even.
    pub fn symmetric(t: u64, delta: u64) -> Result<Self> {
        if t % 2 != 0 {
            return Err(Error::ParamsInvalid(format!(
                "symmetric split requires even t, got {t}"
            )));
        }
        PredicateParams::new(t, t / 2, t / 2, delta)
    }
}

/// The two-input asymmetric l1-distance predicate: 1 iff
/// ||y - x||_dotdiv < t_plus (strict) and ||x - y||_dotdiv <= t_minus - delta.
/// `x` is the database/reference vector.
pub fn predicate_as(x: &PixelVector, y: &PixelVector, params: &PredicateParams) -> Result<bool> {
    let up = norm_l1(&dotdiv(y, x)?);
    let down = norm_l1(&dotdiv(x, y)?);
    Ok(up < params.t_plus && down + params.delta <= params.t_minus)
}

/// Normalized asymmetric l1-distance, as a percentage:
/// 100 * max(||x dotdiv y||_1, ||y dotdiv x||_1) / (q n).
pub fn nad(x: &PixelVector, y: &PixelVector) -> Result<f64> {
    let up = norm_l1(&dotdiv(y, x)?);
    let down = norm_l1(&dotdiv(x, y)?);
    let qn = x.q as f64 * x.len() as f64;
    Ok(100.0 * up.max(down) as f64 / qn)
}

/// Largest threshold t consistent with an observed NAD percentage:
/// t = floor(q n nad / 50).
pub fn threshold_from_nad(nad_pct: f64, q: u32, n: usize) -> u64 {
    if nad_pct <= 0.0 {
        return 0;
    }
    (q as f64 * n as f64 * nad_pct / 50.0).floor() as u64
}

/// Percentage of coordinates whose values differ.
pub fn pixel_change_ratio(x: &PixelVector, y: &PixelVector) -> Result<f64> {
    x.check_compatible(y)?;
    let changed = x
        .values
        .iter()
        .zip(&y.values)
        .filter(|(a, b)| a != b)
        .count();
    Ok(100.0 * changed as f64 / x.len() as f64)
}
