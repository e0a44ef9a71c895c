//! CUR factors, the six approximation variants, and checks of the exact
//! decomposition theory.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CurError, Result};
use crate::index::IndexSet;
use crate::linalg::{numerical_rank, pinv, svd, Schatten, SvdFactors, DEFAULT_PINV_TOL, RANK_TOL};
use crate::matrix::DenseMatrix;

/// `C = A(:, J)`, `U = A(I, J)`, `R = A(I, :)`.
#[derive(Clone, Debug)]
pub struct CurFactors {
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub c: DenseMatrix,
    pub u: DenseMatrix,
    pub r: DenseMatrix,
}

pub fn extract_cur(a: &DenseMatrix, rows: &IndexSet, cols: &IndexSet) -> Result<CurFactors> {
    if rows.target_dimension() != a.rows() || cols.target_dimension() != a.cols() {
        return Err(CurError::DimensionMismatch(format!(
            "index sets target {}x{}, matrix is {}x{}",
            rows.target_dimension(),
            cols.target_dimension(),
            a.rows(),
            a.cols()
        )));
    }
    Ok(CurFactors {
        c: a.select_cols(cols.as_slice()),
        u: a.select(rows.as_slice(), cols.as_slice()),
        r: a.select_rows(rows.as_slice()),
        rows: rows.clone(),
        cols: cols.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurVariant {
    /// `C U^+ R`
    Plain,
    /// `C [U]_tau^+ R`
    Thresholded { tau: f64 },
    /// `C (U_k)^+ R`
    RankU { k: usize },
    /// `C C^+ A R^+ R`
    Projection,
    /// `C_k C_k^+ A R_k^+ R_k`
    ProjectionRank { k: usize },
    /// `(C U^+ R)_k`
    PostTruncated { k: usize },
}

impl CurVariant {
    pub fn label(&self) -> &'static str {
        match self {
            CurVariant::Plain => "plain",
            CurVariant::Thresholded { .. } => "thresholded",
            CurVariant::RankU { .. } => "rank_u",
            CurVariant::Projection => "projection",
            CurVariant::ProjectionRank { .. } => "projection_rank",
            CurVariant::PostTruncated { .. } => "post_truncated",
        }
    }

    pub fn rank(&self) -> Option<usize> {
        match *self {
            CurVariant::RankU { k }
            | CurVariant::ProjectionRank { k }
            | CurVariant::PostTruncated { k } => Some(k),
            _ => None,
        }
    }

    pub fn needs_full_matrix(&self) -> bool {
        matches!(
            self,
            CurVariant::Projection | CurVariant::ProjectionRank { .. }
        )
    }

    /// Builds a variant from its label plus the `k` / `tau` parameters.
    pub fn from_parts(label: &str, k: Option<usize>, tau: Option<f64>) -> Result<Self> {
        let need_k =
            || k.ok_or_else(|| CurError::invalid(format!("variant '{label}' needs a rank")));
        Ok(match label {
            "plain" => CurVariant::Plain,
            "thresholded" => CurVariant::Thresholded {
                tau: tau.ok_or_else(|| CurError::invalid("variant 'thresholded' needs tau"))?,
            },
            "rank_u" => CurVariant::RankU { k: need_k()? },
            "projection" => CurVariant::Projection,
            "projection_rank" => CurVariant::ProjectionRank { k: need_k()? },
            "post_truncated" => CurVariant::PostTruncated { k: need_k()? },
            other => return Err(CurError::invalid(format!("unknown variant '{other}'"))),
        })
    }
}

impl fmt::Display for CurVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CurVariant::Thresholded { tau } => write!(f, "thresholded(tau={tau})"),
            CurVariant::RankU { k }
            | CurVariant::ProjectionRank { k }
            | CurVariant::PostTruncated { k } => write!(f, "{}(k={k})", self.label()),
            _ => f.write_str(self.label()),
        }
    }
}

impl FromStr for CurVariant {
    type Err = CurError;

    /// Accepts `plain`, `projection`, `thresholded:0.1`, `rank_u:8`, ...
    fn from_str(s: &str) -> Result<Self> {
        let (label, arg) = match s.split_once(':') {
            Some((l, a)) => (l.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let k = match (label, arg) {
            ("rank_u" | "projection_rank" | "post_truncated", Some(a)) => Some(
                a.parse()
                    .map_err(|_| CurError::invalid(format!("bad rank '{a}'")))?,
            ),
            _ => None,
        };
        let tau = match (label, arg) {
            ("thresholded", Some(a)) => Some(
                a.parse()
                    .map_err(|_| CurError::invalid(format!("bad tau '{a}'")))?,
            ),
            _ => None,
        };
        Self::from_parts(label, k, tau)
    }
}

/// `[X]_tau^+`: inverts singular values `>= tau` that also clear the default
/// relative cutoff, so `tau = 0` reproduces the plain pseudoinverse.
pub fn thresholded_pinv(f: &SvdFactors, tau: f64) -> DenseMatrix {
    let cut = DEFAULT_PINV_TOL * f.sigma.first().copied().unwrap_or(0.0);
    f.pinv_filtered(|s| s >= tau && s > cut)
}

/// `(X_k)^+` from factors of `X`.
pub fn truncated_pinv(f: &SvdFactors, k: usize) -> DenseMatrix {
    f.truncate(k).pinv_filtered({
        let cut = DEFAULT_PINV_TOL * f.sigma.first().copied().unwrap_or(0.0);
        move |s| s > cut
    })
}

/// Orthogonal projector onto the span of the leading `k` left singular
/// vectors of `x`, built from the factors `f` of `x`.
pub(crate) fn rank_k_col_projector(f: &SvdFactors, k: usize) -> DenseMatrix {
    let cut = DEFAULT_PINV_TOL * f.sigma.first().copied().unwrap_or(0.0);
    let kept: Vec<usize> = (0..k.min(f.r())).filter(|&i| f.sigma[i] > cut).collect();
    let w = f.w.select_cols(&kept);
    w.matmul(&w.transpose())
}

/// `X X^+` as `W W^T` over the values that clear the default cutoff.
pub(crate) fn col_projector(f: &SvdFactors) -> DenseMatrix {
    rank_k_col_projector(f, f.r())
}

fn check_rank(k: usize, f: &CurFactors) -> Result<()> {
    let max = f.rows.len().min(f.cols.len());
    if k == 0 || k > max {
        return Err(CurError::RankOutOfRange { k, max });
    }
    Ok(())
}

/// The product named by `variant`. `a` is needed only by the projection
/// variants.
pub fn approximate(
    f: &CurFactors,
    a: Option<&DenseMatrix>,
    variant: CurVariant,
) -> Result<DenseMatrix> {
    if let Some(k) = variant.rank() {
        check_rank(k, f)?;
    }
    let need_a = || {
        a.ok_or_else(|| {
            CurError::invalid(format!(
                "variant '{}' needs the full matrix",
                variant.label()
            ))
        })
    };
    Ok(match variant {
        CurVariant::Plain => f.c.matmul(&pinv(&f.u).matmul(&f.r)),
        CurVariant::Thresholded { tau } => {
            if !(tau >= 0.0) || !tau.is_finite() {
                return Err(CurError::invalid(format!("tau must be >= 0, got {tau}")));
            }
            f.c.matmul(&thresholded_pinv(&svd(&f.u), tau).matmul(&f.r))
        }
        CurVariant::RankU { k } => f.c.matmul(&truncated_pinv(&svd(&f.u), k).matmul(&f.r)),
        CurVariant::Projection => {
            let a = need_a()?;
            // W W^T rather than C C^+: the explicit product loses
            // cond(C) * eps when C is ill conditioned.
            let pc = col_projector(&svd(&f.c));
            let pr = col_projector(&svd(&f.r.transpose()));
            pc.matmul(&a.matmul(&pr))
        }
        CurVariant::ProjectionRank { k } => {
            let a = need_a()?;
            let pc = rank_k_col_projector(&svd(&f.c), k);
            let pr = rank_k_col_projector(&svd(&f.r.transpose()), k);
            pc.matmul(&a.matmul(&pr))
        }
        CurVariant::PostTruncated { k } => {
            let full = f.c.matmul(&pinv(&f.u).matmul(&f.r));
            svd(&full).truncate(k).reconstruct()
        }
    })
}

/// The five equivalent exactness conditions with their residuals.
#[derive(Clone, Debug, Serialize)]
pub struct ExactCurReport {
    pub tol: f64,
    pub rank_a: usize,
    pub rank_u: usize,
    pub rank_c: usize,
    pub rank_r: usize,
    /// rank(U) = rank(A)
    pub rank_u_equals_rank_a: bool,
    /// `||A - C U^+ R||_F / ||A||_F`
    pub cur_residual: f64,
    pub cur_exact: bool,
    /// `||A - C C^+ A R^+ R||_F / ||A||_F`
    pub projection_residual: f64,
    pub projection_exact: bool,
    /// `||A^+ - R^+ U C^+||_F / ||A^+||_F`
    pub pinv_residual: f64,
    pub pinv_exact: bool,
    /// rank(C) = rank(R) = rank(A)
    pub ranks_c_r_equal_a: bool,
    /// `||U^+ - C^+ A R^+||_F / ||U^+||_F`
    pub middle_residual: f64,
    pub middle_identity: bool,
}

impl ExactCurReport {
    pub fn conditions(&self) -> [bool; 5] {
        [
            self.rank_u_equals_rank_a,
            self.cur_exact,
            self.projection_exact,
            self.pinv_exact,
            self.ranks_c_r_equal_a,
        ]
    }

    /// All five true or all five false.
    pub fn consistent(&self) -> bool {
        let c = self.conditions();
        c.iter().all(|&x| x) || c.iter().all(|&x| !x)
    }

    pub fn is_exact(&self) -> bool {
        self.conditions().iter().all(|&x| x)
    }
}

fn rel(diff: &DenseMatrix, scale: f64) -> f64 {
    let d = diff.frobenius_norm();
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

pub fn verify_exact_cur(
    a: &DenseMatrix,
    rows: &IndexSet,
    cols: &IndexSet,
    tol: f64,
) -> Result<ExactCurReport> {
    let f = extract_cur(a, rows, cols)?;
    let rank_a = numerical_rank(a, RANK_TOL);
    let rank_u = numerical_rank(&f.u, RANK_TOL);
    let rank_c = numerical_rank(&f.c, RANK_TOL);
    let rank_r = numerical_rank(&f.r, RANK_TOL);

    let a_norm = a.frobenius_norm();
    let (cp, up, rp, ap) = (pinv(&f.c), pinv(&f.u), pinv(&f.r), pinv(a));

    let cur_residual = rel(&(a - &f.c.matmul(&up.matmul(&f.r))), a_norm);
    let projection = f.c.matmul(&cp.matmul(&a.matmul(&rp.matmul(&f.r))));
    let projection_residual = rel(&(a - &projection), a_norm);
    let pinv_residual = rel(&(&ap - &rp.matmul(&f.u.matmul(&cp))), ap.frobenius_norm());
    let middle_residual = rel(&(&up - &cp.matmul(&a.matmul(&rp))), up.frobenius_norm());

    Ok(ExactCurReport {
        tol,
        rank_a,
        rank_u,
        rank_c,
        rank_r,
        rank_u_equals_rank_a: rank_u == rank_a,
        cur_residual,
        cur_exact: cur_residual <= tol,
        projection_residual,
        projection_exact: projection_residual <= tol,
        pinv_residual,
        pinv_exact: pinv_residual <= tol,
        ranks_c_r_equal_a: rank_c == rank_a && rank_r == rank_a,
        middle_residual,
        middle_identity: middle_residual <= tol,
    })
}

/// Residuals of the structural identities that hold for exact CUR
/// decompositions.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub tol: f64,
    pub rank: usize,
    /// rank(U) = rank(A); every identity except `u_eq_r_a_pinv_c` assumes it.
    pub precondition_ok: bool,
    pub residuals: BTreeMap<String, f64>,
}

/// The one identity that holds without the rank hypothesis.
pub const UNCONDITIONAL_IDENTITY: &str = "u_eq_r_a_pinv_c";

impl IdentityReport {
    /// Names of identities whose residual exceeds `tol` among those whose
    /// hypotheses are met.
    pub fn failures(&self) -> Vec<&str> {
        self.residuals
            .iter()
            .filter(|(name, _)| self.precondition_ok || name.as_str() == UNCONDITIONAL_IDENTITY)
            .filter(|(_, &r)| !(r <= self.tol))
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn all_pass(&self) -> bool {
        self.failures().is_empty()
    }
}

fn rel_scalar(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    if y.abs() > 0.0 {
        d / y.abs()
    } else {
        d
    }
}

pub fn check_identities(
    a: &DenseMatrix,
    rows: &IndexSet,
    cols: &IndexSet,
    tol: f64,
) -> Result<IdentityReport> {
    let f = extract_cur(a, rows, cols)?;
    let fa = svd(a);
    let rank = fa.numerical_rank(RANK_TOL);
    let precondition_ok = numerical_rank(&f.u, RANK_TOL) == rank;
    let (cp, up, rp, ap) = (
        pinv(&f.c),
        pinv(&f.u),
        pinv(&f.r),
        fa.pinv(DEFAULT_PINV_TOL),
    );

    let mut res = BTreeMap::new();
    let mut put = |name: &str, x: &DenseMatrix, y: &DenseMatrix| {
        res.insert(name.to_string(), rel(&(x - y), y.frobenius_norm()));
    };
    put("c_pinv_c_eq_u_pinv_u", &cp.matmul(&f.c), &up.matmul(&f.u));
    put("r_r_pinv_eq_u_u_pinv", &f.r.matmul(&rp), &f.u.matmul(&up));
    put("a_a_pinv_eq_c_c_pinv", &a.matmul(&ap), &f.c.matmul(&cp));
    put("a_pinv_a_eq_r_pinv_r", &ap.matmul(a), &rp.matmul(&f.r));
    put(UNCONDITIONAL_IDENTITY, &f.u, &f.r.matmul(&ap.matmul(&f.c)));
    put("u_pinv_eq_c_pinv_a_r_pinv", &up, &cp.matmul(&a.matmul(&rp)));

    if rank > 0 {
        let wk = fa.w.leading_cols(rank).select_rows(rows.as_slice());
        let vk = fa.v.leading_cols(rank).select_rows(cols.as_slice());
        let (wp, vp) = (pinv(&wk), pinv(&vk));
        let c_up = f.c.matmul(&up);
        let up_r = up.matmul(&f.r);
        let a_rp = a.matmul(&rp);
        let cp_a = cp.matmul(a);
        for (tag, p) in [
            ("1", Schatten::NUCLEAR),
            ("2", Schatten::FROBENIUS),
            ("inf", Schatten::SPECTRAL),
        ] {
            let w = p.norm(&wp);
            let v = p.norm(&vp);
            res.insert(
                format!("norm_c_u_pinv_eq_w_p{tag}"),
                rel_scalar(p.norm(&c_up), w),
            );
            res.insert(
                format!("norm_u_pinv_r_eq_v_p{tag}"),
                rel_scalar(p.norm(&up_r), v),
            );
            res.insert(
                format!("norm_a_r_pinv_eq_w_p{tag}"),
                rel_scalar(p.norm(&a_rp), w),
            );
            res.insert(
                format!("norm_c_pinv_a_eq_v_p{tag}"),
                rel_scalar(p.norm(&cp_a), v),
            );
        }
    }

    Ok(IdentityReport {
        tol,
        rank,
        precondition_ok,
        residuals: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{gaussian, low_rank};

    fn idx(s: &str, n: usize) -> IndexSet {
        IndexSet::parse(s, n).unwrap()
    }

    #[test]
    fn extraction() {
        let a = DenseMatrix::identity(3);
        let f = extract_cur(&a, &idx("1,2", 3), &idx("1,2", 3)).unwrap();
        assert_eq!(f.u, DenseMatrix::identity(2));
        let b = gaussian(4, 5, 1);
        let full = extract_cur(&b, &IndexSet::full(4), &IndexSet::full(5)).unwrap();
        assert_eq!(full.c, b);
        assert_eq!(full.r, b);
        assert_eq!(full.u, b);
        let f = extract_cur(&b, &idx("4,2", 4), &idx("5,1,5", 5)).unwrap();
        assert_eq!(f.u[(0, 2)], b[(3, 4)]);
        assert_eq!(f.u[(1, 1)], b[(1, 0)]);
        assert!(extract_cur(&b, &IndexSet::full(5), &IndexSet::full(5)).is_err());
    }

    #[test]
    fn exact_variants_reproduce_low_rank() {
        let a = low_rank(12, 10, 3, 2);
        let f = extract_cur(&a, &idx("1,4,7,9", 12), &idx("2,3,8", 10)).unwrap();
        for v in [
            CurVariant::Plain,
            CurVariant::Projection,
            CurVariant::Thresholded { tau: 0.0 },
            CurVariant::RankU { k: 3 },
            CurVariant::ProjectionRank { k: 3 },
            CurVariant::PostTruncated { k: 3 },
        ] {
            let x = approximate(&f, Some(&a), v).unwrap();
            assert!(
                (&a - &x).frobenius_norm() <= 1e-8 * a.frobenius_norm(),
                "{v}"
            );
        }
    }

    #[test]
    fn threshold_zero_is_plain_bitwise() {
        let a = gaussian(8, 7, 3);
        let f = extract_cur(&a, &idx("1,2,3,5", 8), &idx("2,4,6", 7)).unwrap();
        let p = approximate(&f, None, CurVariant::Plain).unwrap();
        let t = approximate(&f, None, CurVariant::Thresholded { tau: 0.0 }).unwrap();
        assert_eq!(p, t);
    }

    #[test]
    fn variant_errors() {
        let a = gaussian(5, 5, 4);
        let f = extract_cur(&a, &idx("1,2", 5), &idx("1,2", 5)).unwrap();
        assert!(matches!(
            approximate(&f, Some(&a), CurVariant::RankU { k: 3 }),
            Err(CurError::RankOutOfRange { .. })
        ));
        assert!(approximate(&f, None, CurVariant::Projection).is_err());
        assert!(approximate(&f, None, CurVariant::Thresholded { tau: -1.0 }).is_err());
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(
            "rank_u:4".parse::<CurVariant>().unwrap(),
            CurVariant::RankU { k: 4 }
        );
        assert_eq!(
            "thresholded:0.5".parse::<CurVariant>().unwrap(),
            CurVariant::Thresholded { tau: 0.5 }
        );
        assert!("rank_u".parse::<CurVariant>().is_err());
        assert!("other".parse::<CurVariant>().is_err());
        let json = serde_json::to_string(&CurVariant::ProjectionRank { k: 2 }).unwrap();
        assert_eq!(json, r#"{"kind":"projection_rank","k":2}"#);
    }

    #[test]
    fn verify_identity_all_false() {
        let a = DenseMatrix::identity(3);
        let r = verify_exact_cur(&a, &idx("1", 3), &idx("1", 3), 1e-8).unwrap();
        assert_eq!(r.conditions(), [false; 5]);
        assert!(r.consistent());
    }

    #[test]
    fn verify_valid_rank() {
        let a = low_rank(10, 9, 2, 5);
        let r = verify_exact_cur(&a, &idx("1,2,3", 10), &idx("4,5", 9), 1e-8).unwrap();
        assert!(r.is_exact(), "{r:?}");
        assert!(r.middle_identity);
    }

    #[test]
    fn identities_on_low_rank() {
        let a = low_rank(10, 8, 3, 6);
        let r = check_identities(&a, &idx("1,3,5,7,9", 10), &idx("2,4,6,8,1", 8), 1e-8).unwrap();
        assert!(r.precondition_ok);
        assert!(r.all_pass(), "{:?}", r.failures());
        assert_eq!(r.residuals.len(), 6 + 12);
    }

    #[test]
    fn unconditional_identity_on_full_rank() {
        let a = gaussian(6, 6, 7);
        let r = check_identities(&a, &idx("1,2", 6), &idx("3,4,5", 6), 1e-8).unwrap();
        assert!(!r.precondition_ok);
        assert!(r.residuals[UNCONDITIONAL_IDENTITY] <= 1e-8);
        assert!(r.all_pass());
    }
}
