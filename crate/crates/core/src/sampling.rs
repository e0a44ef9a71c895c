//! Row and column selection: uniform, squared-length and leverage-score
//! sampling with replacement, greedy rectangular maxvol, exhaustive maxvol for
//! small inputs, and the maxvol quality factors.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CurError, Result};
pub use crate::index::IndexSet;
use crate::linalg::{numerical_rank, svd, volume, RANK_TOL};
use crate::matrix::{dot, DenseMatrix};

/// Seed for every random draw in the crate. Equal seeds give equal output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Child seed for a sub-task, e.g. `(trial, count)`.
    pub fn derive(self, parts: &[u64]) -> RngSeed {
        let mut h = splitmix(self.0);
        for &p in parts {
            h = splitmix(h ^ splitmix(p));
        }
        RngSeed(h)
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Rows,
    Cols,
}

impl Axis {
    fn len(self, a: &DenseMatrix) -> usize {
        match self {
            Axis::Rows => a.rows(),
            Axis::Cols => a.cols(),
        }
    }
}

/// `count` i.i.d. uniform draws from `0..n`.
pub fn uniform_sample(n: usize, count: usize, seed: RngSeed) -> Result<IndexSet> {
    if n == 0 || count == 0 {
        return Err(CurError::invalid(format!(
            "uniform sampling needs n >= 1 and count >= 1 (got n={n}, count={count})"
        )));
    }
    let mut rng = seed.rng();
    let idx = (0..count).map(|_| rng.random_range(0..n)).collect();
    IndexSet::new(idx, n)
}

/// Draws `count` indices from an unnormalized weight vector, with replacement.
pub fn weighted_sample(weights: &[f64], count: usize, seed: RngSeed) -> Result<IndexSet> {
    if count == 0 {
        return Err(CurError::invalid("count must be >= 1"));
    }
    let dist = WeightedIndex::new(weights)
        .map_err(|e| CurError::invalid(format!("sampling distribution undefined: {e}")))?;
    let mut rng = seed.rng();
    let idx = (0..count).map(|_| dist.sample(&mut rng)).collect();
    IndexSet::new(idx, weights.len())
}

/// Probability of each row/column proportional to its squared length.
pub fn length_probabilities(a: &DenseMatrix, axis: Axis) -> Vec<f64> {
    let mut w = match axis {
        Axis::Cols => (0..a.cols())
            .map(|j| dot(a.col(j), a.col(j)))
            .collect::<Vec<_>>(),
        Axis::Rows => {
            let mut w = vec![0.0; a.rows()];
            for j in 0..a.cols() {
                for (wi, x) in w.iter_mut().zip(a.col(j)) {
                    *wi += x * x;
                }
            }
            w
        }
    };
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    }
    w
}

pub fn length_sample(a: &DenseMatrix, count: usize, axis: Axis, seed: RngSeed) -> Result<IndexSet> {
    let p = length_probabilities(a, axis);
    if p.iter().all(|&x| x == 0.0) {
        return Err(CurError::invalid("length sampling on a zero matrix"));
    }
    weighted_sample(&p, count, seed)
}

/// Rank-`k` leverage scores along `axis`, divided by `k` so they sum to one.
pub fn leverage_scores(a: &DenseMatrix, k: usize, axis: Axis) -> Result<Vec<f64>> {
    let rank = numerical_rank(a, RANK_TOL);
    if k == 0 || k > rank {
        return Err(CurError::RankOutOfRange { k, max: rank });
    }
    let f = svd(a).truncate(k);
    let basis = match axis {
        Axis::Rows => &f.w,
        Axis::Cols => &f.v,
    };
    let mut s = vec![0.0; basis.rows()];
    for j in 0..k {
        for (si, x) in s.iter_mut().zip(basis.col(j)) {
            *si += x * x;
        }
    }
    s.iter_mut().for_each(|x| *x /= k as f64);
    Ok(s)
}

pub fn leverage_sample(
    a: &DenseMatrix,
    count: usize,
    k: usize,
    axis: Axis,
    seed: RngSeed,
) -> Result<IndexSet> {
    debug_assert!(axis.len(a) > 0);
    weighted_sample(&leverage_scores(a, k, axis)?, count, seed)
}

/// Greedy rectangular maxvol on the rows of a tall `m x k` matrix.
///
/// A pivoted elimination picks `k` starting rows, square maxvol swaps refine
/// them, then rows are appended one at a time, each maximising the volume of
/// the enlarged submatrix.
pub fn maxvol_select(q: &DenseMatrix, count: usize) -> Result<IndexSet> {
    let (m, k) = q.shape();
    if k == 0 || count < k || count > m {
        return Err(CurError::invalid(format!(
            "maxvol needs k <= count <= m (k={k}, count={count}, m={m})"
        )));
    }
    if numerical_rank(q, RANK_TOL) < k {
        return Err(CurError::RankDeficient(format!(
            "maxvol input has rank below {k}"
        )));
    }
    let mut chosen = pivoted_rows(q)?;
    square_maxvol(q, &mut chosen)?;

    let mut in_set = vec![false; m];
    chosen.iter().for_each(|&i| in_set[i] = true);

    // G = (Q_I^T Q_I)^{-1}; adding row x scales vol^2 by 1 + x^T G x.
    let qi = q.select_rows(&chosen);
    let mut g = invert_spd(&qi.t_matmul(&qi))?;
    while chosen.len() < count {
        let mut best = None;
        let mut best_gain = f64::NEG_INFINITY;
        for i in (0..m).filter(|&i| !in_set[i]) {
            let x = q.row(i);
            let gx = g.matmul(&DenseMatrix::from_col_major(k, 1, x.clone())?);
            let gain = dot(&x, gx.as_slice());
            if gain > best_gain * (1.0 + 1e-12) || best.is_none() {
                best_gain = gain;
                best = Some((i, gx));
            }
        }
        let (i, gx) = best.expect("a free row exists while chosen.len() < m");
        let denom = 1.0 + best_gain;
        for c in 0..k {
            for r in 0..k {
                g[(r, c)] -= gx.as_slice()[r] * gx.as_slice()[c] / denom;
            }
        }
        in_set[i] = true;
        chosen.push(i);
    }
    IndexSet::new(chosen, m)
}

/// Partial-pivoted elimination on the columns of `q`, returning `k` rows.
fn pivoted_rows(q: &DenseMatrix) -> Result<Vec<usize>> {
    let (m, k) = q.shape();
    let mut work = q.clone();
    let mut used = vec![false; m];
    let mut rows = Vec::with_capacity(k);
    let scale = q.max_abs();
    for c in 0..k {
        let mut piv = None;
        let mut best = 0.0;
        for i in (0..m).filter(|&i| !used[i]) {
            if work[(i, c)].abs() > best {
                best = work[(i, c)].abs();
                piv = Some(i);
            }
        }
        let p = match piv {
            Some(p) if best > 1e-14 * scale => p,
            _ => {
                return Err(CurError::RankDeficient(
                    "maxvol elimination hit a zero pivot".into(),
                ))
            }
        };
        used[p] = true;
        rows.push(p);
        let pv = work[(p, c)];
        for i in (0..m).filter(|&i| !used[i]) {
            let f = work[(i, c)] / pv;
            if f != 0.0 {
                for cc in c..k {
                    let d = work[(p, cc)];
                    work[(i, cc)] -= f * d;
                }
            }
        }
    }
    Ok(rows)
}

/// Swaps rows into `rows` while some coefficient of `Q Q_I^{-1}` exceeds one.
fn square_maxvol(q: &DenseMatrix, rows: &mut [usize]) -> Result<()> {
    let (m, k) = q.shape();
    for _ in 0..(10 * m).max(100) {
        let inv = solve_square_inverse(&q.select_rows(rows))?;
        let b = q.matmul(&inv);
        let mut best = (0, 0, 1.0 + 1e-12);
        for j in 0..k {
            for i in 0..m {
                let x = b[(i, j)].abs();
                if x > best.2 {
                    best = (i, j, x);
                }
            }
        }
        if best.2 <= 1.0 + 1e-12 {
            return Ok(());
        }
        rows[best.1] = best.0;
    }
    Ok(())
}

/// Inverse of a square matrix via Gauss-Jordan with partial pivoting.
fn solve_square_inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.rows();
    let mut w = a.clone();
    let mut inv = DenseMatrix::identity(n);
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| w[(x, c)].abs().total_cmp(&w[(y, c)].abs()))
            .expect("non-empty range");
        if w[(p, c)] == 0.0 {
            return Err(CurError::RankDeficient("singular square submatrix".into()));
        }
        if p != c {
            for cc in 0..n {
                let t = w[(p, cc)];
                w[(p, cc)] = w[(c, cc)];
                w[(c, cc)] = t;
                let t = inv[(p, cc)];
                inv[(p, cc)] = inv[(c, cc)];
                inv[(c, cc)] = t;
            }
        }
        let d = w[(c, c)];
        for cc in 0..n {
            w[(c, cc)] /= d;
            inv[(c, cc)] /= d;
        }
        for r in (0..n).filter(|&r| r != c) {
            let f = w[(r, c)];
            if f != 0.0 {
                for cc in 0..n {
                    w[(r, cc)] -= f * w[(c, cc)];
                    inv[(r, cc)] -= f * inv[(c, cc)];
                }
            }
        }
    }
    Ok(inv)
}

fn invert_spd(a: &DenseMatrix) -> Result<DenseMatrix> {
    let inv = solve_square_inverse(a)?;
    Ok(inv.symmetrize())
}

/// Every `count`-subset of `0..m` in lexicographic order.
pub(crate) fn for_each_subset(m: usize, count: usize, mut f: impl FnMut(&[usize])) {
    if count > m {
        return;
    }
    let mut idx: Vec<usize> = (0..count).collect();
    loop {
        f(&idx);
        let mut i = count;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < m - count + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..count {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// True maximum-volume `count`-row subset by enumeration, with its volume.
/// Ties resolve to the lexicographically first subset.
pub fn exhaustive_maxvol(q: &DenseMatrix, count: usize) -> Result<(IndexSet, f64)> {
    let m = q.rows();
    if count == 0 || count > m {
        return Err(CurError::invalid(format!("count {count} outside 1..={m}")));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    for_each_subset(m, count, |s| {
        let v = volume(&q.select_rows(s));
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((s.to_vec(), v));
        }
    });
    let (rows, v) = best.expect("at least one subset");
    Ok((IndexSet::new(rows, m)?, v))
}

/// Whether `rows` attains the maximal volume among subsets of its size,
/// up to a relative `1e-12`. Exhaustive: only for small inputs.
pub fn is_maxvol_certified(q: &DenseMatrix, rows: &IndexSet) -> Result<bool> {
    let mut sorted = rows.as_slice().to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != rows.len() {
        return Ok(false);
    }
    let (_, best) = exhaustive_maxvol(q, rows.len())?;
    let v = volume(&q.select_rows(rows.as_slice()));
    Ok(best > 0.0 && v >= best * (1.0 - 1e-12))
}

fn check_t_args(k: usize, m: usize, size: usize) -> Result<()> {
    if k == 0 || size < k || size > m {
        return Err(CurError::invalid(format!(
            "t-factor needs 1 <= k <= |I| <= m (k={k}, |I|={size}, m={m})"
        )));
    }
    Ok(())
}

/// `sqrt(1 + k (m - |I|) / (|I| - k + 1))`.
pub fn t_factor(k: usize, m: usize, size: usize) -> Result<f64> {
    check_t_args(k, m, size)?;
    let (k, m, s) = (k as f64, m as f64, size as f64);
    Ok((1.0 + k * (m - s) / (s - k + 1.0)).sqrt())
}

/// `sqrt(k + k (m - |I|) / (|I| - k + 1))`.
pub fn t_factor_frobenius(k: usize, m: usize, size: usize) -> Result<f64> {
    check_t_args(k, m, size)?;
    let (k, m, s) = (k as f64, m as f64, size as f64);
    Ok((k + k * (m - s) / (s - k + 1.0)).sqrt())
}
