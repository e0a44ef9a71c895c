//! Dense kernel: SVD, pseudoinverse, truncation, thresholding, Schatten norms
//! and matrix volume.
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration with cyclic sweeps. A
//! column pair is rotated only while the cosine of the angle between the two
//! columns exceeds [`JACOBI_ORTH_TOL`]; on exit every pair of columns is
//! orthogonal to working precision, which gives orthonormal singular vectors
//! even for singular values at the rounding level.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CurError, Result};
use crate::index::IndexSet;
use crate::matrix::{dot, norm2, DenseMatrix};

/// Relative cutoff for [`pseudoinverse`] when callers have no preference.
pub const DEFAULT_PINV_TOL: f64 = 1e-12;

/// Relative cutoff used when a rank is compared for equality.
pub const RANK_TOL: f64 = 1e-10;

/// Pair-rotation threshold on `|a_p . a_q| / (|a_p| |a_q|)`.
pub const JACOBI_ORTH_TOL: f64 = 1e-15;

const MAX_SWEEPS: usize = 80;

/// Thin SVD factors `A = W diag(sigma) V^T`.
///
/// `sigma` is non-increasing; `W` and `V` have orthonormal columns. Each right
/// singular vector has a nonnegative first nonzero entry.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    pub w: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    /// Number of retained triplets.
    pub fn r(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_filtered(|_| true)
    }

    /// `sum_i sigma_i w_i v_i^T` over the triplets whose value passes `keep`.
    pub fn reconstruct_filtered(&self, keep: impl Fn(f64) -> bool) -> DenseMatrix {
        let kept: Vec<usize> = (0..self.r()).filter(|&i| keep(self.sigma[i])).collect();
        let mut ws = self.w.select_cols(&kept);
        for (c, &i) in kept.iter().enumerate() {
            let s = self.sigma[i];
            ws.col_mut(c).iter_mut().for_each(|x| *x *= s);
        }
        ws.matmul(&self.v.select_cols(&kept).transpose())
    }

    /// `sum_i sigma_i^{-1} v_i w_i^T` over the triplets whose value passes
    /// `keep`; zero singular values are always dropped.
    pub fn pinv_filtered(&self, keep: impl Fn(f64) -> bool) -> DenseMatrix {
        let kept: Vec<usize> = (0..self.r())
            .filter(|&i| self.sigma[i] > 0.0 && keep(self.sigma[i]))
            .collect();
        let mut vs = self.v.select_cols(&kept);
        for (c, &i) in kept.iter().enumerate() {
            let s = 1.0 / self.sigma[i];
            vs.col_mut(c).iter_mut().for_each(|x| *x *= s);
        }
        vs.matmul(&self.w.select_cols(&kept).transpose())
    }

    /// Moore-Penrose pseudoinverse dropping values `<= rank_tol * sigma_1`.
    pub fn pinv(&self, rank_tol: f64) -> DenseMatrix {
        let cut = rank_tol * self.sigma.first().copied().unwrap_or(0.0);
        self.pinv_filtered(|s| s > cut)
    }

    /// Leading `k` triplets.
    pub fn truncate(&self, k: usize) -> SvdFactors {
        let k = k.min(self.r());
        SvdFactors {
            w: self.w.leading_cols(k),
            sigma: self.sigma[..k].to_vec(),
            v: self.v.leading_cols(k),
        }
    }

    /// Count of values `> tol * sigma_1`.
    pub fn numerical_rank(&self, tol: f64) -> usize {
        rank_of_spectrum(&self.sigma, tol)
    }
}

/// Full thin SVD with `r = min(m, n)`.
pub fn svd(a: &DenseMatrix) -> SvdFactors {
    let (m, n) = a.shape();
    if m >= n {
        let (work, v) = jacobi(a, true);
        let mut f = finish(work, v.expect("requested"));
        normalize_signs(&mut f);
        f
    } else {
        let (work, v) = jacobi(&a.transpose(), true);
        let t = finish(work, v.expect("requested"));
        let mut f = SvdFactors {
            w: t.v,
            sigma: t.sigma,
            v: t.w,
        };
        normalize_signs(&mut f);
        f
    }
}

/// Singular values only, non-increasing, `min(m, n)` of them.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let work = if a.rows() >= a.cols() {
        jacobi(a, false).0
    } else {
        jacobi(&a.transpose(), false).0
    };
    let mut s: Vec<f64> = (0..work.cols()).map(|j| norm2(work.col(j))).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Best rank-`k` factors.
pub fn truncated_svd(a: &DenseMatrix, k: usize) -> Result<SvdFactors> {
    let max = a.rows().min(a.cols());
    if k == 0 || k > max {
        return Err(CurError::RankOutOfRange { k, max });
    }
    Ok(svd(a).truncate(k))
}

/// `A_k`, the best rank-`k` approximation as a matrix.
pub fn best_rank_k(a: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    Ok(truncated_svd(a, k)?.reconstruct())
}

/// `[A]_tau`: singular values below `tau` set to zero.
pub fn threshold_svd(a: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(CurError::invalid(format!(
            "threshold must be a finite value >= 0, got {tau}"
        )));
    }
    Ok(svd(a).reconstruct_filtered(|s| s >= tau))
}

/// Moore-Penrose pseudoinverse; values `<= rank_tol * sigma_1` count as zero.
pub fn pseudoinverse(a: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    if !(rank_tol >= 0.0) || !rank_tol.is_finite() {
        return Err(CurError::invalid(format!(
            "rank_tol must be >= 0, got {rank_tol}"
        )));
    }
    Ok(svd(a).pinv(rank_tol))
}

/// [`pseudoinverse`] with [`DEFAULT_PINV_TOL`].
pub fn pinv(a: &DenseMatrix) -> DenseMatrix {
    svd(a).pinv(DEFAULT_PINV_TOL)
}

/// Schatten index `p` in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schatten(f64);

impl Schatten {
    pub const NUCLEAR: Schatten = Schatten(1.0);
    pub const FROBENIUS: Schatten = Schatten(2.0);
    pub const SPECTRAL: Schatten = Schatten(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(CurError::invalid(format!(
                "Schatten index must be >= 1, got {p}"
            )));
        }
        Ok(Schatten(p))
    }

    pub fn p(self) -> f64 {
        self.0
    }

    pub fn is_spectral(self) -> bool {
        self.0.is_infinite()
    }

    /// `l_p` norm of a singular-value vector.
    pub fn of_spectrum(self, sigma: &[f64]) -> f64 {
        let max = sigma.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        if max == 0.0 {
            return 0.0;
        }
        match self.0 {
            p if p.is_infinite() => max,
            1.0 => sigma.iter().map(|s| s.abs()).sum(),
            2.0 => norm2(sigma),
            p => {
                let sum: f64 = sigma.iter().map(|s| (s.abs() / max).powf(p)).sum();
                max * sum.powf(1.0 / p)
            }
        }
    }

    pub fn norm(self, a: &DenseMatrix) -> f64 {
        if self.0 == 2.0 {
            return a.frobenius_norm();
        }
        self.of_spectrum(&singular_values(a))
    }
}

impl std::str::FromStr for Schatten {
    type Err = CurError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "spectral" | "2-norm" => Ok(Schatten::SPECTRAL),
            "fro" | "frobenius" | "f" => Ok(Schatten::FROBENIUS),
            "nuc" | "nuclear" | "trace" => Ok(Schatten::NUCLEAR),
            other => other
                .parse::<f64>()
                .map_err(|_| CurError::invalid(format!("unknown norm '{s}'")))
                .and_then(Schatten::new),
        }
    }
}

impl fmt::Display for Schatten {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Schatten {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

/// Accepts the strings understood by `FromStr` or a bare number.
impl<'de> Deserialize<'de> for Schatten {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Schatten::new(p),
            Raw::Text(t) => t.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// `||A||_{S_p}`; `p = f64::INFINITY` is the spectral norm.
pub fn schatten_norm(a: &DenseMatrix, p: f64) -> Result<f64> {
    Ok(Schatten::new(p)?.norm(a))
}

pub fn spectral_norm(a: &DenseMatrix) -> f64 {
    Schatten::SPECTRAL.norm(a)
}

/// Product of the `min(m, n)` singular values.
pub fn volume(b: &DenseMatrix) -> f64 {
    singular_values(b).iter().product()
}

/// Checked `A(I, J)`.
pub fn submatrix(a: &DenseMatrix, rows: &IndexSet, cols: &IndexSet) -> Result<DenseMatrix> {
    if rows.target_dimension() != a.rows() || cols.target_dimension() != a.cols() {
        return Err(CurError::DimensionMismatch(format!(
            "index sets target {}x{} but matrix is {}x{}",
            rows.target_dimension(),
            cols.target_dimension(),
            a.rows(),
            a.cols()
        )));
    }
    Ok(a.select(rows.as_slice(), cols.as_slice()))
}

/// Count of singular values `> tol * sigma_1`.
pub fn numerical_rank(a: &DenseMatrix, tol: f64) -> usize {
    rank_of_spectrum(&singular_values(a), tol)
}

pub(crate) fn rank_of_spectrum(sigma: &[f64], tol: f64) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > tol * top).count()
}

/// Orthonormal basis of the columns of a full-column-rank matrix
/// (modified Gram-Schmidt, two passes).
pub fn orthonormalize(a: &DenseMatrix) -> DenseMatrix {
    let mut q = a.clone();
    for j in 0..q.cols() {
        for _ in 0..2 {
            for i in 0..j {
                let (head, tail) = q.col_pair_mut(i, j);
                let r = dot(head, tail);
                tail.iter_mut()
                    .zip(head.iter())
                    .for_each(|(t, h)| *t -= r * h);
            }
        }
        let nrm = norm2(q.col(j));
        if nrm > 0.0 {
            q.col_mut(j).iter_mut().for_each(|x| *x /= nrm);
        }
    }
    q
}

/// One-sided Jacobi on a tall (`m >= n`) matrix. Returns the rotated columns
/// (`A V`) and optionally the accumulated `V`.
fn jacobi(a: &DenseMatrix, want_v: bool) -> (DenseMatrix, Option<DenseMatrix>) {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut work = a.clone();
    let mut v = want_v.then(|| DenseMatrix::identity(n));
    if n < 2 {
        return (work, v);
    }
    let mut norms = vec![0.0; n];
    for _ in 0..MAX_SWEEPS {
        for (j, nj) in norms.iter_mut().enumerate() {
            *nj = dot(work.col(j), work.col(j));
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(work.col(p), work.col(q));
                if gamma.abs() <= JACOBI_ORTH_TOL * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate_cols(&mut work, p, q, c, s);
                if let Some(v) = v.as_mut() {
                    rotate_cols(v, p, q, c, s);
                }
                let na = alpha - t * gamma;
                let nb = beta + t * gamma;
                // Incremental updates lose accuracy when a column collapses.
                norms[p] = if na < 1e-3 * alpha {
                    dot(work.col(p), work.col(p))
                } else {
                    na
                };
                norms[q] = if nb < 1e-3 * beta {
                    dot(work.col(q), work.col(q))
                } else {
                    nb
                };
            }
        }
        if !rotated {
            break;
        }
    }
    (work, v)
}

#[inline]
fn rotate_cols(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let (cp, cq) = a.col_pair_mut(p, q);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Sorts, normalises and completes the Jacobi output into thin SVD factors.
fn finish(work: DenseMatrix, v: DenseMatrix) -> SvdFactors {
    let (m, n) = work.shape();
    let raw: Vec<f64> = (0..n).map(|j| norm2(work.col(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable: ties keep the original column order.
    order.sort_by(|&x, &y| raw[y].total_cmp(&raw[x]));

    let mut w = DenseMatrix::zeros(m, n);
    let mut vv = DenseMatrix::zeros(v.rows(), n);
    let mut sigma = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = raw[src];
        sigma.push(s);
        vv.col_mut(dst).copy_from_slice(v.col(src));
        let col = work.col(src);
        if s > 1e-290 {
            w.col_mut(dst)
                .iter_mut()
                .zip(col)
                .for_each(|(o, x)| *o = x / s);
        } else {
            missing.push(dst);
        }
    }
    if !missing.is_empty() {
        complete_basis(&mut w, &missing);
    }
    SvdFactors { w, sigma, v: vv }
}

/// Fills the listed columns of `w` with unit vectors orthogonal to all others.
fn complete_basis(w: &mut DenseMatrix, missing: &[usize]) {
    let m = w.rows();
    let mut filled: Vec<usize> = (0..w.cols()).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0usize;
    for &slot in missing {
        loop {
            assert!(candidate < m, "basis completion ran out of candidates");
            let mut e = vec![0.0; m];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let r = dot(w.col(j), &e);
                    e.iter_mut().zip(w.col(j)).for_each(|(x, q)| *x -= r * q);
                }
            }
            let nrm = norm2(&e);
            if nrm > 0.5 {
                w.col_mut(slot)
                    .iter_mut()
                    .zip(&e)
                    .for_each(|(o, x)| *o = x / nrm);
                filled.push(slot);
                break;
            }
        }
    }
}

fn normalize_signs(f: &mut SvdFactors) {
    for j in 0..f.r() {
        let lead = f.v.col(j).iter().copied().find(|x| x.abs() > 1e-300);
        if matches!(lead, Some(x) if x < 0.0) {
            f.v.col_mut(j).iter_mut().for_each(|x| *x = -*x);
            f.w.col_mut(j).iter_mut().for_each(|x| *x = -*x);
        }
    }
}
