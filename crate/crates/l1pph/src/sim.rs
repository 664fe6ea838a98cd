//! Experiment harness: the false-match probability of the hash-domain
//! evaluation on distance-violating pairs, the empirical pairwise error of a
//! corpus, the coefficient-recursion cross-check, list-size curves, and
//! wall-clock timing of the three kernels.
//!
//! All randomness is seeded; trials shard across workers with per-shard
//! ChaCha streams so identical seeds reproduce identical outputs at any
//! worker count.

use crate::bounds::{binom, list_size_lower, log2_biguint};
use crate::error::{Error, Result};
use crate::field::Fp;
use crate::metrics::{predicate_as, PixelVector, PredicateParams};
use crate::pph::{eval, hash, invert_digest, samp, sigma_untruncated, HashKey};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;

/// One simulation configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrialConfig {
    pub n: usize,
    pub q: u32,
    pub t: u64,
    pub t_plus: u64,
    pub t_minus: u64,
    pub delta: u64,
    pub trials: u64,
    pub seed: u64,
}

impl TrialConfig {
    pub fn params(&self) -> Result<PredicateParams> {
        PredicateParams::new(self.t, self.t_plus, self.t_minus, self.delta)
    }
}

/// Empirical false-match rate next to its p^-delta reference.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaRun {
    pub delta: u64,
    pub p: u64,
    pub trials: u64,
    pub hits: u64,
    pub empirical: f64,
    pub reference: f64,
}

/// Builds y from x by pushing `up` units of positive one-sided difference and
/// `down` units of negative one-sided difference onto disjoint coordinates.
/// Returns None if this x cannot absorb the requested mass.
fn push_mass(rng: &mut impl Rng, x: &[u32], q: u32, up: u64, down: u64) -> Option<Vec<u32>> {
    let n = x.len();
    let mut y: Vec<u32> = x.to_vec();
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let j = rng.gen_range(i..n);
        order.swap(i, j);
    }
    let mut up_left = up;
    let mut used_up = vec![false; n];
    for &i in &order {
        if up_left == 0 {
            break;
        }
        let room = (q - 1 - x[i]) as u64;
        if room == 0 {
            continue;
        }
        let take = room.min(up_left);
        y[i] += take as u32;
        up_left -= take;
        used_up[i] = true;
    }
    if up_left > 0 {
        return None;
    }
    let mut down_left = down;
    for &i in &order {
        if down_left == 0 {
            break;
        }
        if used_up[i] {
            continue;
        }
        let room = x[i] as u64;
        if room == 0 {
            continue;
        }
        let take = room.min(down_left);
        y[i] -= take as u32;
        down_left -= take;
    }
    if down_left > 0 {
        return None;
    }
    Some(y)
}

fn random_vector(rng: &mut impl Rng, n: usize, q: u32) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..q)).collect()
}

/// Draws an (x, y) pair violating both thresholds:
/// ||y dotdiv x||_1 >= t_plus and ||x dotdiv y||_1 > t_minus.
pub fn far_pair(
    rng: &mut impl Rng,
    n: usize,
    q: u32,
    t_plus: u64,
    t_minus: u64,
) -> Result<(PixelVector, PixelVector)> {
    for _ in 0..1000 {
        let x = random_vector(rng, n, q);
        if let Some(y) = push_mass(rng, &x, q, t_plus, t_minus + 1) {
            return Ok((
                PixelVector::new(x, q)?,
                PixelVector::new(y, q)?,
            ));
        }
    }
    Err(Error::ConstructionFailure(format!(
        "cannot realize distances (>= {t_plus}, > {t_minus}) in Z_{q}^{n}"
    )))
}

/// Draws an (x, y) pair satisfying the predicate:
/// ||y dotdiv x||_1 < t_plus and ||x dotdiv y||_1 <= t_minus - delta.
pub fn near_pair(
    rng: &mut impl Rng,
    n: usize,
    q: u32,
    params: &PredicateParams,
) -> Result<(PixelVector, PixelVector)> {
    for _ in 0..1000 {
        let x = random_vector(rng, n, q);
        let up = rng.gen_range(0..params.t_plus);
        let down = rng.gen_range(0..=params.t_minus - params.delta);
        if let Some(y) = push_mass(rng, &x, q, up, down) {
            return Ok((
                PixelVector::new(x, q)?,
                PixelVector::new(y, q)?,
            ));
        }
    }
    Err(Error::ConstructionFailure(format!(
        "cannot realize predicate-true distances in Z_{q}^{n}"
    )))
}

fn run_trials(
    cfg: &TrialConfig,
    key: &HashKey,
    make_pair: impl Fn(&mut ChaCha12Rng) -> Result<(PixelVector, PixelVector)> + Sync,
) -> Result<u64> {
    const SHARD: u64 = 512;
    let shards = cfg.trials.div_ceil(SHARD);
    let counts: Result<Vec<u64>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            rng.set_stream(s + 1);
            let in_shard = SHARD.min(cfg.trials - s * SHARD);
            let mut hits = 0;
            for _ in 0..in_shard {
                let (x, y) = make_pair(&mut rng)?;
                let inv_x = invert_digest(key, &hash(key, &x)?)?;
                let d_y = hash(key, &y)?;
                if eval(key, &inv_x, &d_y)?.matched {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect();
    Ok(counts?.iter().sum())
}

/// Measures how often the hash-domain evaluation reports a match on pairs
/// that violate both distance thresholds. The reference is p^-delta.
pub fn simulate_delta(cfg: &TrialConfig) -> Result<DeltaRun> {
    if cfg.trials == 0 {
        return Err(Error::ParamsInvalid("trials must be >= 1".into()));
    }
    let params = cfg.params()?;
    let key = samp(cfg.seed, cfg.n, cfg.q, params)?;
    let hits = run_trials(cfg, &key, |rng| {
        far_pair(rng, cfg.n, cfg.q, params.t_plus, params.t_minus)
    })?;
    Ok(DeltaRun {
        delta: cfg.delta,
        p: key.p,
        trials: cfg.trials,
        hits,
        empirical: hits as f64 / cfg.trials as f64,
        reference: (key.p as f64).powi(-(cfg.delta as i32)),
    })
}

/// Control arm: the same harness on predicate-true pairs. One-sided
/// correctness makes this rate exactly 1.
pub fn simulate_control(cfg: &TrialConfig) -> Result<DeltaRun> {
    if cfg.trials == 0 {
        return Err(Error::ParamsInvalid("trials must be >= 1".into()));
    }
    let params = cfg.params()?;
    let key = samp(cfg.seed, cfg.n, cfg.q, params)?;
    let hits = run_trials(cfg, &key, |rng| near_pair(rng, cfg.n, cfg.q, &params))?;
    Ok(DeltaRun {
        delta: cfg.delta,
        p: key.p,
        trials: cfg.trials,
        hits,
        empirical: hits as f64 / cfg.trials as f64,
        reference: 1.0,
    })
}

/// Empirical pairwise error of a corpus: the fraction of ordered pairs
/// (i < j) on which the predicate oracle fires.
pub fn empirical_error(corpus: &[PixelVector], params: &PredicateParams) -> Result<f64> {
    let n = corpus.len();
    if n < 2 {
        return Err(Error::ParamsInvalid("corpus needs at least 2 images".into()));
    }
    for v in &corpus[1..] {
        if v.len() != corpus[0].len() || v.q() != corpus[0].q() {
            return Err(Error::DimensionMismatch(
                "corpus images disagree on length or alphabet".into(),
            ));
        }
    }
    let hits: u64 = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut h = 0u64;
            for j in i + 1..n {
                if predicate_as(&corpus[i], &corpus[j], params).expect("corpus validated") {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let pairs = n as u64 * (n as u64 - 1) / 2;
    Ok(hits as f64 / pairs as f64)
}

/// Digest coefficients computed by the multiplicity recursion instead of by
/// expanding the product. S(j, r) sums degree-j products over the last r
/// coordinates, each coordinate contributing its point with multiplicity x_i:
/// S(j, r) = sum_i C(x_{n-r+1}, i) a_{n-r+1}^i S(j-i, r-1). The jth
/// coefficient is then (-1)^j S(j, n).
pub fn sigma_coeffs_by_recursion(fp: &Fp, a: &[u64], x: &[u32]) -> Vec<u64> {
    let n = a.len();
    let m: u64 = x.iter().map(|&v| v as u64).sum();
    let m = m as usize;
    // table[j] = S(j, r) for the current r, growing r from 0 to n
    let mut table = vec![0u64; m + 1];
    table[0] = 1;
    for k in (0..n).rev() {
        let mut next = vec![0u64; m + 1];
        let xi = x[k] as i64;
        let ai = fp.reduce(a[k]);
        for j in 0..=m {
            let mut acc = 0u64;
            let mut a_pow = 1u64;
            for i in 0..=j.min(xi as usize) {
                let c = binom(xi, i as i64) % fp.modulus();
                let c = c.to_u64().unwrap();
                let term = fp.mul(fp.mul(c, a_pow), table[j - i]);
                acc = fp.add(acc, term);
                a_pow = fp.mul(a_pow, ai);
            }
            next[j] = acc;
        }
        table = next;
    }
    (0..=m)
        .map(|j| {
            if j % 2 == 0 {
                table[j]
            } else {
                fp.neg(table[j])
            }
        })
        .collect()
}

/// Compares the recursion coefficients against the expanded product for
/// every j. The l1 norm of x must stay small enough to expand fully.
pub fn relabel_check(fp: &Fp, a: &[u64], x: &[u32]) -> bool {
    let m: u64 = x.iter().map(|&v| v as u64).sum();
    if m > 64 {
        return false;
    }
    let by_recursion = sigma_coeffs_by_recursion(fp, a, x);
    let by_product = sigma_untruncated(fp, a, x);
    by_recursion == by_product.coeffs_padded(m as usize + 1)
}

/// One timing row: medians of the three kernels at a block geometry.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub size: String,
    pub color: String,
    pub b: u64,
    pub n_b: usize,
    pub t_b: u64,
    pub time_sigma: f64,
    pub time_inv: f64,
    pub time_eval: f64,
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples[samples.len() / 2]
}

/// Times hash, invert and eval on one block of the given geometry. Eval runs
/// on a non-matching pair, its worst case. Medians over `reps` repetitions.
pub fn bench_block(
    size: &str,
    color: &str,
    b: u64,
    n_b: usize,
    t_b: u64,
    reps: usize,
    seed: u64,
) -> Result<BenchRow> {
    let t_b_even = t_b & !1;
    let params = PredicateParams::symmetric(t_b_even, 0)?;
    let key = samp(seed, n_b, 256, params)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x9E37_79B9);
    let (x, y) = far_pair(&mut rng, n_b, 256, params.t_plus, params.t_minus)?;

    let mut t_sigma = Vec::with_capacity(reps);
    let mut t_inv = Vec::with_capacity(reps);
    let mut t_eval = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let d = std::hint::black_box(hash(&key, &x)?);
        t_sigma.push(start.elapsed().as_secs_f64());

        let start = Instant::now();
        let inv = std::hint::black_box(invert_digest(&key, &d)?);
        t_inv.push(start.elapsed().as_secs_f64());

        let q = hash(&key, &y)?;
        let start = Instant::now();
        std::hint::black_box(eval(&key, &inv, &q)?);
        t_eval.push(start.elapsed().as_secs_f64());
    }
    Ok(BenchRow {
        size: size.to_string(),
        color: color.to_string(),
        b,
        n_b,
        t_b,
        time_sigma: median(&mut t_sigma),
        time_inv: median(&mut t_inv),
        time_eval: median(&mut t_eval),
    })
}

/// The reference per-block timing grid: geometry taken from the reported
/// operating point t = 0.01 q n with per-block n_B = n/B.
pub fn paper_bench_grid() -> Vec<(&'static str, &'static str, u64, usize, u64)> {
    vec![
        ("224x224", "rgb", 1000, 150, 384),
        ("128x128", "rgb", 100, 491, 1256),
        ("64x64", "rgb", 100, 122, 312),
        ("28x28", "rgb", 10, 235, 601),
        ("28x28", "gray", 1, 784, 2007),
    ]
}

/// Times eval at fixed p = next_prime(n) over a doubling grid of t, for the
/// quadratic-scaling check. Returns (t, median seconds) pairs.
pub fn bench_eval_scaling(
    n: usize,
    ts: &[u64],
    reps: usize,
    seed: u64,
) -> Result<Vec<(u64, f64)>> {
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        let params = PredicateParams::symmetric(t & !1, 0)?;
        let key = samp(seed, n, 256, params)?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ t);
        let (x, y) = far_pair(&mut rng, n, 256, params.t_plus, params.t_minus)?;
        let inv_x = invert_digest(&key, &hash(&key, &x)?)?;
        let d_y = hash(&key, &y)?;
        // warm-up
        std::hint::black_box(eval(&key, &inv_x, &d_y)?);
        let mut samples = Vec::with_capacity(reps);
        for _ in 0..reps {
            let start = Instant::now();
            std::hint::black_box(eval(&key, &inv_x, &d_y)?);
            samples.push(start.elapsed().as_secs_f64());
        }
        out.push((t, median(&mut samples)));
    }
    Ok(out)
}

/// Least-squares slope of ln(time) against ln(t): the empirical scaling
/// exponent.
pub fn fit_log_slope(points: &[(u64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(t, _)| (*t as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, s)| s.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// log2 of the list-size lower bound over a grid.
pub fn list_size_curve(
    n_grid: &[u64],
    q: u64,
    t_range: std::ops::RangeInclusive<u64>,
) -> Result<Vec<(u64, u64, f64)>> {
    let mut rows = Vec::new();
    for &n in n_grid {
        for t in t_range.clone() {
            let v = list_size_lower(n, q, t)?;
            rows.push((n, t, log2_biguint(&v)));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{dotdiv, norm_l1};

    #[test]
    fn far_pair_realizes_distances() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (x, y) = far_pair(&mut rng, 10, 5, 5, 5).unwrap();
            assert!(norm_l1(&dotdiv(&y, &x).unwrap()) >= 5);
            assert!(norm_l1(&dotdiv(&x, &y).unwrap()) > 5);
        }
    }

    #[test]
    fn far_pair_impossible_space_errors() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        assert!(matches!(
            far_pair(&mut rng, 2, 2, 5, 5),
            Err(Error::ConstructionFailure(_))
        ));
    }

    #[test]
    fn near_pair_satisfies_predicate() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let params = PredicateParams::new(10, 5, 5, 2).unwrap();
        for _ in 0..200 {
            let (x, y) = near_pair(&mut rng, 12, 6, &params).unwrap();
            assert!(predicate_as(&x, &y, &params).unwrap());
        }
    }

    #[test]
    fn control_arm_rate_is_one() {
        let cfg = TrialConfig {
            n: 10,
            q: 5,
            t: 10,
            t_plus: 5,
            t_minus: 5,
            delta: 2,
            trials: 500,
            seed: 9,
        };
        let run = simulate_control(&cfg).unwrap();
        assert_eq!(run.hits, run.trials);
    }

    #[test]
    fn simulate_delta_is_deterministic() {
        let cfg = TrialConfig {
            n: 10,
            q: 5,
            t: 10,
            t_plus: 5,
            t_minus: 5,
            delta: 1,
            trials: 2000,
            seed: 17,
        };
        let a = simulate_delta(&cfg).unwrap();
        let b = simulate_delta(&cfg).unwrap();
        assert_eq!(a.hits, b.hits);
        assert_eq!(a.p, 11);
        assert!(a.empirical <= a.reference);
    }

    #[test]
    fn empirical_error_extremes() {
        let params = PredicateParams::symmetric(4, 0).unwrap();
        let same = vec![PixelVector::new(vec![3, 3, 3], 8).unwrap(); 4];
        assert_eq!(empirical_error(&same, &params).unwrap(), 1.0);
        let far = vec![
            PixelVector::new(vec![0, 0, 0], 8).unwrap(),
            PixelVector::new(vec![7, 7, 7], 8).unwrap(),
            PixelVector::new(vec![7, 0, 7], 8).unwrap(),
        ];
        assert_eq!(empirical_error(&far, &params).unwrap(), 0.0);
    }

    #[test]
    fn recursion_matches_product_spot_identities() {
        let fp = Fp::new(5);
        let a = [1u64, 2, 3, 4];
        let x = [2u32, 0, 1, 3];
        let coeffs = sigma_coeffs_by_recursion(&fp, &a, &x);
        assert_eq!(coeffs[0], 1);
        let mut s = 0;
        for (&ai, &xi) in a.iter().zip(&x) {
            s = fp.add(s, fp.mul(ai, xi as u64));
        }
        assert_eq!(coeffs[1], fp.neg(s));
        assert!(relabel_check(&fp, &a, &x));
    }

    #[test]
    fn fit_log_slope_recovers_exponent() {
        let pts: Vec<(u64, f64)> = [256u64, 512, 1024, 2048]
            .iter()
            .map(|&t| (t, 3.5e-9 * (t as f64).powi(2)))
            .collect();
        let slope = fit_log_slope(&pts);
        assert!((slope - 2.0).abs() < 1e-9);
    }

    #[test]
    fn list_curve_shape() {
        let rows = list_size_curve(&[784, 4096], 256, 257..=260).unwrap();
        assert_eq!(rows.len(), 8);
        // log2 = log2(n) at t = q + 1
        assert!((rows[0].2 - (784f64).log2()).abs() < 1e-9);
        // nondecreasing in n at fixed t
        let at_t = |n: u64, t: u64| rows.iter().find(|r| r.0 == n && r.1 == t).unwrap().2;
        for t in 257..=260 {
            assert!(at_t(4096, t) >= at_t(784, t));
        }
    }
}
