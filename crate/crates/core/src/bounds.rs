//! Right-hand sides of the CUR perturbation bounds next to the measured
//! errors, plus the classical singular value and pseudoinverse perturbation
//! facts they are built on.
//!
//! Notation: `A` has rank `k`, `Ã = A + E`, `W_k`, `V_k` are the leading
//! singular vectors of `A`, and `w = ||W_k(I,:)^+||`, `v = ||V_k(J,:)^+||`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::Serialize;

use crate::cur::{
    col_projector, extract_cur, rank_k_col_projector, thresholded_pinv, truncated_pinv, CurFactors,
};
use crate::error::{CurError, Result};
use crate::index::IndexSet;
use crate::linalg::{
    pseudoinverse, rank_of_spectrum, singular_values, svd, Schatten, SvdFactors, DEFAULT_PINV_TOL,
    RANK_TOL,
};
use crate::matrix::DenseMatrix;
use crate::sampling::{is_maxvol_certified, t_factor};

/// Relative slack when comparing a measured error against a bound.
pub const BOUND_REL_SLACK: f64 = 1e-8;
/// Absolute slack, as a fraction of `||A||`, absorbing rounding in the
/// measured error when the bound itself is zero or tiny.
pub const BOUND_ABS_SLACK: f64 = 1e-10;

/// `E` and its pieces aligned with `(I, J)`.
#[derive(Clone, Debug)]
pub struct NoiseDecomposition {
    pub e: DenseMatrix,
    /// `E(I, :)`
    pub e_i: DenseMatrix,
    /// `E(:, J)`
    pub e_j: DenseMatrix,
    /// `E(I, J)`
    pub e_ij: DenseMatrix,
}

impl NoiseDecomposition {
    pub fn new(e: &DenseMatrix, rows: &IndexSet, cols: &IndexSet) -> Result<Self> {
        let f = extract_cur(e, rows, cols)?;
        Ok(Self {
            e: e.clone(),
            e_i: f.r,
            e_j: f.c,
            e_ij: f.u,
        })
    }
}

/// A Schatten norm with its pseudoinverse perturbation constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormSpec {
    pub p: Schatten,
    pub mu: f64,
}

impl NormSpec {
    pub fn new(p: Schatten) -> Self {
        let mu = if p.is_spectral() {
            (1.0 + 5f64.sqrt()) / 2.0
        } else if p.p() == 2.0 {
            2f64.sqrt()
        } else {
            3.0
        };
        Self { p, mu }
    }

    pub fn spectral() -> Self {
        Self::new(Schatten::SPECTRAL)
    }

    pub fn frobenius() -> Self {
        Self::new(Schatten::FROBENIUS)
    }

    pub fn nuclear() -> Self {
        Self::new(Schatten::NUCLEAR)
    }

    fn of(&self, spectrum: &[f64]) -> f64 {
        self.p.of_spectrum(spectrum)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `C̃ C̃^+ Ã R̃^+ R̃`
    Projection,
    /// `C̃ [Ũ]_tau^+ R̃`
    Thresholded,
    /// `C̃ Ũ^+ R̃`
    Plain,
    /// `C̃ Ũ_k^+ R̃`
    RankU,
    /// `C̃_k C̃_k^+ Ã R̃_k^+ R̃_k`
    ProjectionRank,
    /// projection_rank with maximal-volume index sets
    MaxvolProjectionRank,
    /// rank_u with maximal-volume index sets
    MaxvolRankU,
}

impl BoundKind {
    pub fn label(self) -> &'static str {
        match self {
            BoundKind::Projection => "projection",
            BoundKind::Thresholded => "thresholded",
            BoundKind::Plain => "plain",
            BoundKind::RankU => "rank_u",
            BoundKind::ProjectionRank => "projection_rank",
            BoundKind::MaxvolProjectionRank => "maxvol_projection_rank",
            BoundKind::MaxvolRankU => "maxvol_rank_u",
        }
    }

    pub fn all_basic() -> [BoundKind; 5] {
        [
            BoundKind::Projection,
            BoundKind::Thresholded,
            BoundKind::Plain,
            BoundKind::RankU,
            BoundKind::ProjectionRank,
        ]
    }
}

/// A secondary right-hand side with its own hypothesis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Alternate {
    pub rhs: Option<f64>,
    pub precondition_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub norm: Schatten,
    /// Main right-hand side; `None` when it is undefined (a denominator that
    /// is not positive).
    pub rhs: Option<f64>,
    pub lhs_measured: f64,
    pub precondition_ok: bool,
    pub alternates: BTreeMap<String, Alternate>,
    /// Every norm and constant that enters the right-hand sides.
    pub terms: BTreeMap<String, f64>,
}

fn within(lhs: f64, rhs: f64, a_norm: f64) -> bool {
    lhs <= rhs * (1.0 + BOUND_REL_SLACK) + BOUND_ABS_SLACK * a_norm
}

impl BoundReport {
    pub fn term(&self, name: &str) -> f64 {
        *self
            .terms
            .get(name)
            .unwrap_or_else(|| panic!("bound report has no term '{name}'"))
    }

    /// `Some(lhs <= rhs)` when the hypotheses hold and the bound is defined.
    pub fn holds(&self) -> Option<bool> {
        match (self.precondition_ok, self.rhs) {
            (true, Some(rhs)) => Some(within(self.lhs_measured, rhs, self.term("a_norm"))),
            _ => None,
        }
    }

    pub fn alternate_holds(&self, name: &str) -> Option<bool> {
        let alt = self.alternates.get(name)?;
        match (self.precondition_ok && alt.precondition_ok, alt.rhs) {
            (true, Some(rhs)) => Some(within(self.lhs_measured, rhs, self.term("a_norm"))),
            _ => None,
        }
    }

    /// Checks the main bound and every applicable alternate; returns the
    /// names of violated ones.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.holds() == Some(false) {
            out.push("main".to_string());
        }
        for name in self.alternates.keys() {
            if self.alternate_holds(name) == Some(false) {
                out.push(name.clone());
            }
        }
        out
    }
}

/// Nonzero singular values of `X^+`, i.e. reciprocals of those of `X` above
/// the default cutoff, in any order.
fn pinv_spectrum(sigma: &[f64]) -> Vec<f64> {
    let cut = DEFAULT_PINV_TOL * sigma.first().copied().unwrap_or(0.0);
    sigma
        .iter()
        .filter(|&&s| s > cut)
        .map(|s| 1.0 / s)
        .collect()
}

/// Ground truth, perturbation and index sets, with the spectra every bound
/// needs computed once.
pub struct PerturbedInstance {
    pub a: DenseMatrix,
    pub a_tilde: DenseMatrix,
    pub k: usize,
    pub rows: IndexSet,
    pub cols: IndexSet,
    pub noise: NoiseDecomposition,
    pub clean: CurFactors,
    pub noisy: CurFactors,
    svd_a: SvdFactors,
    svd_ut: SvdFactors,
    spectra: BTreeMap<&'static str, Vec<f64>>,
    standing_ok: bool,
    lhs_projection: OnceLock<Vec<f64>>,
    lhs_rank_u: OnceLock<Vec<f64>>,
    lhs_projection_rank: OnceLock<Vec<f64>>,
    plain_spectra: OnceLock<(Vec<f64>, Vec<f64>)>,
}

impl PerturbedInstance {
    pub fn new(
        a: &DenseMatrix,
        e: &DenseMatrix,
        k: usize,
        rows: &IndexSet,
        cols: &IndexSet,
    ) -> Result<Self> {
        if a.shape() != e.shape() {
            return Err(CurError::DimensionMismatch(format!(
                "A is {}x{} but E is {}x{}",
                a.rows(),
                a.cols(),
                e.rows(),
                e.cols()
            )));
        }
        let svd_a = svd(a);
        let rank = svd_a.numerical_rank(RANK_TOL);
        if k == 0 || k > rank {
            return Err(CurError::RankOutOfRange { k, max: rank });
        }
        let noise = NoiseDecomposition::new(e, rows, cols)?;
        let a_tilde = a + e;
        let clean = extract_cur(a, rows, cols)?;
        let noisy = extract_cur(&a_tilde, rows, cols)?;
        let svd_ut = svd(&noisy.u);

        let wk_i = svd_a.w.leading_cols(k).select_rows(rows.as_slice());
        let vk_j = svd_a.v.leading_cols(k).select_rows(cols.as_slice());
        let c_pinv = pseudoinverse(&clean.c, DEFAULT_PINV_TOL)?;
        let r_pinv = pseudoinverse(&clean.r, DEFAULT_PINV_TOL)?;
        let sigma_u = singular_values(&clean.u);
        let sigma_c = singular_values(&clean.c);
        let sigma_r = singular_values(&clean.r);

        let mut spectra = BTreeMap::new();
        spectra.insert("e", singular_values(e));
        spectra.insert("e_i", singular_values(&noise.e_i));
        spectra.insert("e_j", singular_values(&noise.e_j));
        spectra.insert("e_ij", singular_values(&noise.e_ij));
        spectra.insert("a", svd_a.sigma.clone());
        spectra.insert("a_pinv", pinv_spectrum(&svd_a.sigma[..k]));
        spectra.insert("w", pinv_spectrum(&singular_values(&wk_i)));
        spectra.insert("v", pinv_spectrum(&singular_values(&vk_j)));
        spectra.insert("c_pinv_a", singular_values(&c_pinv.matmul(a)));
        spectra.insert("a_r_pinv", singular_values(&a.matmul(&r_pinv)));
        spectra.insert("u_pinv", pinv_spectrum(&sigma_u));
        spectra.insert("ut_pinv", pinv_spectrum(&svd_ut.sigma));

        let standing_ok = rank_of_spectrum(&sigma_u, RANK_TOL) == k
            && rank_of_spectrum(&sigma_c, RANK_TOL) == k
            && rank_of_spectrum(&sigma_r, RANK_TOL) == k;
        spectra.insert("u", sigma_u);

        Ok(Self {
            a: a.clone(),
            a_tilde,
            k,
            rows: rows.clone(),
            cols: cols.clone(),
            noise,
            clean,
            noisy,
            svd_a,
            svd_ut,
            spectra,
            standing_ok,
            lhs_projection: OnceLock::new(),
            lhs_rank_u: OnceLock::new(),
            lhs_projection_rank: OnceLock::new(),
            plain_spectra: OnceLock::new(),
        })
    }

    /// rank(C) = rank(U) = rank(R) = k.
    pub fn standing_assumptions_hold(&self) -> bool {
        self.standing_ok
    }

    pub fn svd_of_a(&self) -> &SvdFactors {
        &self.svd_a
    }

    fn spec(&self, name: &str) -> &[f64] {
        &self.spectra[name]
    }

    fn norm(&self, name: &str, n: NormSpec) -> f64 {
        n.of(self.spec(name))
    }

    fn spectral(&self, name: &str) -> f64 {
        Schatten::SPECTRAL.of_spectrum(self.spec(name))
    }

    /// `sigma_k(U)`, zero when U has fewer than `k` values.
    pub fn sigma_k_u(&self) -> f64 {
        self.spec("u").get(self.k - 1).copied().unwrap_or(0.0)
    }

    /// `(w, v)` in the given norm.
    pub fn singular_vector_terms(&self, n: NormSpec) -> (f64, f64) {
        (self.norm("w", n), self.norm("v", n))
    }

    fn base_terms(&self, n: NormSpec) -> BTreeMap<String, f64> {
        let mut t = BTreeMap::new();
        for name in ["e", "e_i", "e_j", "e_ij", "w", "v", "c_pinv_a", "a_r_pinv"] {
            t.insert(name.to_string(), self.norm(name, n));
        }
        t.insert("w2".into(), self.spectral("w"));
        t.insert("v2".into(), self.spectral("v"));
        t.insert("e_2".into(), self.spectral("e"));
        t.insert("mu".into(), n.mu);
        t.insert("a_norm".into(), n.of(self.spec("a")));
        t
    }

    fn residual_spectrum(&self, approx: &DenseMatrix) -> Vec<f64> {
        singular_values(&(&self.a - approx))
    }

    fn projection_lhs(&self) -> &[f64] {
        self.lhs_projection.get_or_init(|| {
            let pc = col_projector(&svd(&self.noisy.c));
            let pr = col_projector(&svd(&self.noisy.r.transpose()));
            self.residual_spectrum(&pc.matmul(&self.a_tilde.matmul(&pr)))
        })
    }

    fn projection_rank_lhs(&self) -> &[f64] {
        self.lhs_projection_rank.get_or_init(|| {
            let pc = rank_k_col_projector(&svd(&self.noisy.c), self.k);
            let pr = rank_k_col_projector(&svd(&self.noisy.r.transpose()), self.k);
            self.residual_spectrum(&pc.matmul(&self.a_tilde.matmul(&pr)))
        })
    }

    fn rank_u_lhs(&self) -> &[f64] {
        self.lhs_rank_u.get_or_init(|| {
            let up = truncated_pinv(&self.svd_ut, self.k);
            self.residual_spectrum(&self.noisy.c.matmul(&up.matmul(&self.noisy.r)))
        })
    }

    /// `(spectrum of A - C̃ [Ũ]_tau^+ R̃, spectrum of [Ũ]_tau - U)`.
    fn thresholded_spectra(&self, tau: f64) -> (Vec<f64>, Vec<f64>) {
        let up = thresholded_pinv(&self.svd_ut, tau);
        let lhs = self.residual_spectrum(&self.noisy.c.matmul(&up.matmul(&self.noisy.r)));
        let ut_tau = self.svd_ut.reconstruct_filtered(|s| s >= tau);
        (lhs, singular_values(&(&ut_tau - &self.clean.u)))
    }

    /// Nonzero singular values of `[Ũ]_tau^+`.
    fn ut_tau_pinv_spectrum(&self, tau: f64) -> Vec<f64> {
        let cut = DEFAULT_PINV_TOL * self.svd_ut.sigma.first().copied().unwrap_or(0.0);
        self.svd_ut
            .sigma
            .iter()
            .filter(|&&s| s >= tau && s > cut)
            .map(|s| 1.0 / s)
            .collect()
    }

    pub fn bound_projection(&self, n: NormSpec) -> BoundReport {
        let t = self.base_terms(n);
        let (e, ei, ej, w, v) = (t["e"], t["e_i"], t["e_j"], t["w"], t["v"]);
        let tight = ei * t["a_r_pinv"] + ej * t["c_pinv_a"] + 3.0 * e;
        let simple = e * (w + v + 3.0);
        let mut alternates = BTreeMap::new();
        alternates.insert("simplified".into(), alt(Some(simple), true));
        BoundReport {
            kind: BoundKind::Projection,
            norm: n.p,
            rhs: Some(tight),
            lhs_measured: n.of(self.projection_lhs()),
            precondition_ok: self.standing_ok,
            alternates,
            terms: t,
        }
    }

    pub fn bound_thresholded(&self, tau: f64, n: NormSpec) -> Result<BoundReport> {
        if !(tau >= 0.0) || !tau.is_finite() {
            return Err(CurError::invalid(format!("tau must be >= 0, got {tau}")));
        }
        let (lhs, diff) = if tau == 0.0 {
            self.plain_spectra
                .get_or_init(|| self.thresholded_spectra(0.0))
                .clone()
        } else {
            self.thresholded_spectra(tau)
        };
        let mut t = self.base_terms(n);
        let pinv_spec = self.ut_tau_pinv_spectrum(tau);
        let utp = n.of(&pinv_spec);
        let utp2 = Schatten::SPECTRAL.of_spectrum(&pinv_spec);
        let ut_minus_u = n.of(&diff);
        t.insert("tau".into(), tau);
        t.insert("ut_tau_pinv".into(), utp);
        t.insert("ut_tau_pinv_2".into(), utp2);
        t.insert("ut_tau_minus_u".into(), ut_minus_u);
        let (e, ei, ej, eij) = (t["e"], t["e_i"], t["e_j"], t["e_ij"]);

        let form = |w: f64, v: f64, up: f64| {
            w * ei
                + v * ej
                + w * v * (2.0 * eij + ut_minus_u)
                + up * ((w * ei + v * ej + w * v * eij) * eij + ei * ej)
        };
        let main = form(t["w"], t["v"], utp);
        let spectral_factors = form(t["w2"], t["v2"], utp2);
        let (w, v) = (t["w"], t["v"]);
        let summary =
            (w + v + 2.0 * w * v) * e + w * v * ut_minus_u + utp2 * (w + v + w * v + 1.0) * e * e;

        let mut alternates = BTreeMap::new();
        alternates.insert("spectral_factors".into(), alt(Some(spectral_factors), true));
        alternates.insert("summary_table".into(), alt(Some(summary), true));
        Ok(BoundReport {
            kind: BoundKind::Thresholded,
            norm: n.p,
            rhs: Some(main),
            lhs_measured: n.of(&lhs),
            precondition_ok: self.standing_ok,
            alternates,
            terms: t,
        })
    }

    /// The thresholded bound at `tau = 0`, plus the form written purely in
    /// `||E||`.
    pub fn bound_plain(&self, n: NormSpec) -> BoundReport {
        let mut r = self.bound_thresholded(0.0, n).expect("tau = 0 is valid");
        r.kind = BoundKind::Plain;
        let (w, v, e, up) = (r.term("w"), r.term("v"), r.term("e"), r.term("ut_tau_pinv"));
        let simple = (w + v + 3.0 * w * v) * e + up * (w + v + w * v + 1.0) * e * e;
        let summary = r.alternates["summary_table"];
        r.alternates.clear();
        r.alternates
            .insert("simplified".into(), alt(Some(simple), true));
        r.alternates.insert(
            "summary_table".into(),
            alt(
                summary.rhs.map(|_| {
                    let up2 = r.term("ut_tau_pinv_2");
                    (w + v + 3.0 * w * v) * e + up2 * (w + v + w * v + 1.0) * e * e
                }),
                true,
            ),
        );
        r
    }

    pub fn bound_rank_u(&self, n: NormSpec) -> BoundReport {
        let mut t = self.base_terms(n);
        let (e, ei, ej, eij, w, v) = (t["e"], t["e_i"], t["e_j"], t["e_ij"], t["w"], t["v"]);
        let mu = n.mu;
        let up = self.norm("u_pinv", n);
        let up2 = self.spectral("u_pinv");
        let ap = self.norm("a_pinv", n);
        let ap2 = self.spectral("a_pinv");
        let sk = self.sigma_k_u();
        t.insert("u_pinv".into(), up);
        t.insert("u_pinv_2".into(), up2);
        t.insert("a_pinv".into(), ap);
        t.insert("a_pinv_2".into(), ap2);
        t.insert("sigma_k_u".into(), sk);
        let ukp: Vec<f64> = pinv_spectrum(&self.svd_ut.sigma)
            .into_iter()
            .rev()
            .take(self.k)
            .collect();
        t.insert("ut_k_pinv".into(), n.of(&ukp));

        let first = w * ei + v * ej + 4.0 * w * v * eij;
        let second = w * ei * eij + v * ej * eij + w * v * eij * eij + ei * ej;
        let positive = |d: f64| if d > 0.0 { Some(d) } else { None };

        let main = positive(1.0 - 2.0 * mu * up2 * eij).map(|d| first + up / d * second);
        let (w2, v2) = (t["w2"], t["v2"]);
        let independent =
            positive(1.0 - 2.0 * mu * w2 * v2 * ap2 * eij).map(|d| first + w * v * ap / d * second);
        let h = 1.0 / (2.0 * mu);
        let linear = ((1.0 + h) * (w + v) + (4.0 + h) * w * v + h) * e;
        let summary = positive(1.0 - 2.0 * mu * up2 * e)
            .map(|d| (w + v + 4.0 * w * v) * e + up2 / d * (w + v + w * v + 1.0) * e * e);
        t.insert(
            "frac".into(),
            main.map_or(f64::INFINITY, |_| up / (1.0 - 2.0 * mu * up2 * eij)),
        );

        let mut alternates = BTreeMap::new();
        alternates.insert("u_independent".into(), alt(independent, true));
        alternates.insert("linear".into(), alt(Some(linear), sk > 4.0 * mu * e));
        alternates.insert("summary_table".into(), alt(summary, true));
        BoundReport {
            kind: BoundKind::RankU,
            norm: n.p,
            rhs: main,
            lhs_measured: n.of(self.rank_u_lhs()),
            precondition_ok: self.standing_ok && sk > 2.0 * mu * eij,
            alternates,
            terms: t,
        }
    }

    pub fn bound_projection_rank(&self, n: NormSpec) -> BoundReport {
        let t = self.base_terms(n);
        let (e, ei, ej, w, v) = (t["e"], t["e_i"], t["e_j"], t["w"], t["v"]);
        let tight = 2.0 * (ej * t["c_pinv_a"] + ei * t["a_r_pinv"] + 1.5 * e);
        let simple = 2.0 * e * (w + v + 1.5);
        let crossed = 2.0 * (ej * w + ei * v + 1.5 * e);
        let mut alternates = BTreeMap::new();
        alternates.insert("simplified".into(), alt(Some(simple), true));
        alternates.insert("e_j_with_w".into(), alt(Some(crossed), true));
        BoundReport {
            kind: BoundKind::ProjectionRank,
            norm: n.p,
            rhs: Some(tight),
            lhs_measured: n.of(self.projection_rank_lhs()),
            precondition_ok: self.standing_ok,
            alternates,
            terms: t,
        }
    }

    pub fn bound(&self, kind: BoundKind, tau: f64, n: NormSpec) -> Result<BoundReport> {
        Ok(match kind {
            BoundKind::Projection => self.bound_projection(n),
            BoundKind::Thresholded => self.bound_thresholded(tau, n)?,
            BoundKind::Plain => self.bound_plain(n),
            BoundKind::RankU => self.bound_rank_u(n),
            BoundKind::ProjectionRank => self.bound_projection_rank(n),
            BoundKind::MaxvolProjectionRank | BoundKind::MaxvolRankU => {
                let m = self.bound_maxvol(n)?;
                if kind == BoundKind::MaxvolRankU {
                    m.rank_u
                } else {
                    m.projection_rank
                }
            }
        })
    }

    /// Bounds that depend only on `t`-factors. `I` and `J` must be true
    /// maximal-volume subsets of `W_k` and `V_k`; this is checked by
    /// enumeration, so keep inputs small.
    pub fn bound_maxvol(&self, n: NormSpec) -> Result<MaxvolBounds> {
        let (m, ncols, k) = (self.a.rows(), self.a.cols(), self.k);
        let wk = self.svd_a.w.leading_cols(k);
        let vk = self.svd_a.v.leading_cols(k);
        let certified = self.rows.len() >= k
            && self.cols.len() >= k
            && is_maxvol_certified(&wk, &self.rows)?
            && is_maxvol_certified(&vk, &self.cols)?;
        let t_rows = t_factor(k, m, self.rows.len().max(k).min(m))?;
        let t_cols = t_factor(k, ncols, self.cols.len().max(k).min(ncols))?;

        let mut terms = self.base_terms(n);
        let e = terms["e"];
        let mu = n.mu;
        let sigma_k_a = self.svd_a.sigma[k - 1];
        terms.insert("t_rows".into(), t_rows);
        terms.insert("t_cols".into(), t_cols);
        terms.insert("sigma_k_a".into(), sigma_k_a);

        let square = m == ncols && self.rows.len() == self.cols.len();
        let mut pr_alt = BTreeMap::new();
        if square {
            pr_alt.insert("square".into(), alt(Some((4.0 * t_rows + 3.0) * e), true));
        }
        let projection_rank = BoundReport {
            kind: BoundKind::MaxvolProjectionRank,
            norm: n.p,
            rhs: Some((2.0 * t_rows + 2.0 * t_cols + 3.0) * e),
            lhs_measured: n.of(self.projection_rank_lhs()),
            precondition_ok: certified,
            alternates: pr_alt,
            terms: terms.clone(),
        };

        let h = 1.0 / (2.0 * mu);
        let ru = (h + (1.0 + h) * (t_rows + t_cols) + (4.0 + h) * t_rows * t_cols) * e;
        let mut ru_alt = BTreeMap::new();
        if square {
            let t = t_rows;
            ru_alt.insert(
                "square".into(),
                alt(
                    Some((h + (2.0 + 1.0 / mu) * t + (4.0 + h) * t * t) * e),
                    true,
                ),
            );
        }
        let rank_u = BoundReport {
            kind: BoundKind::MaxvolRankU,
            norm: n.p,
            rhs: Some(ru),
            lhs_measured: n.of(self.rank_u_lhs()),
            precondition_ok: certified && sigma_k_a >= 4.0 * mu * t_rows * t_cols * e,
            alternates: ru_alt,
            terms,
        };
        Ok(MaxvolBounds {
            certified,
            t_rows,
            t_cols,
            projection_rank,
            rank_u,
        })
    }

    /// Every basic bound in one norm, thresholded at each `tau`.
    pub fn evaluate_all(&self, n: NormSpec, taus: &[f64]) -> Result<Vec<BoundReport>> {
        let mut out = vec![self.bound_projection(n)];
        for &tau in taus {
            out.push(self.bound_thresholded(tau, n)?);
        }
        out.push(self.bound_plain(n));
        out.push(self.bound_rank_u(n));
        out.push(self.bound_projection_rank(n));
        Ok(out)
    }

    /// Summary table of the simplified bounds in `w`, `v` notation with live
    /// values, followed by measured errors. Six significant digits.
    pub fn render_summary_table(&self, n: NormSpec, tau: f64) -> Result<String> {
        let proj = self.bound_projection(n);
        let thr = self.bound_thresholded(tau, n)?;
        let plain = self.bound_plain(n);
        let ru = self.bound_rank_u(n);
        let pr = self.bound_projection_rank(n);
        let (w, v) = self.singular_vector_terms(n);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "norm S_{}  k={}  |I|={}  |J|={}  w={:.6e}  v={:.6e}  ||E||={:.6e}  mu={:.6}",
            n.p,
            self.k,
            self.rows.len(),
            self.cols.len(),
            w,
            v,
            proj.term("e"),
            n.mu
        );
        let _ = writeln!(
            s,
            "{:<26} {:<70} {:>13} {:>13}",
            "approximation", "bound", "rhs", "measured"
        );
        let fmt = |x: Option<f64>| x.map_or("undefined".to_string(), |x| format!("{x:.6e}"));
        let rows: [(&str, &str, Option<f64>, f64); 5] = [
            (
                "C~ C~+ A~ R~+ R~",
                "(w+v+3)||E||",
                proj.alternates["simplified"].rhs,
                proj.lhs_measured,
            ),
            (
                "C~ U~+ R~",
                "(w+v+3wv)||E|| + ||U~+||(w+v+wv+1)||E||^2",
                plain.alternates["simplified"].rhs,
                plain.lhs_measured,
            ),
            (
                "C~ [U~]_tau+ R~",
                "(w+v+2wv)||E|| + wv||[U~]_tau-U|| + ||[U~]_tau+||_2(w+v+wv+1)||E||^2",
                thr.alternates["summary_table"].rhs,
                thr.lhs_measured,
            ),
            (
                "C~ U~_k+ R~",
                "(w+v+4wv)||E|| + ||U+||_2/(1-2mu||U+||_2||E||)(w+v+wv+1)||E||^2",
                ru.alternates["summary_table"].rhs,
                ru.lhs_measured,
            ),
            (
                "C~_k C~_k+ A~ R~_k+ R~_k",
                "(2w+2v+3)||E||",
                pr.alternates["simplified"].rhs,
                pr.lhs_measured,
            ),
        ];
        for (name, formula, rhs, lhs) in rows {
            let _ = writeln!(
                s,
                "{name:<26} {formula:<70} {:>13} {:>13.6e}",
                fmt(rhs),
                lhs
            );
        }
        if !self.standing_ok {
            s.push_str("warning: rank(C) = rank(U) = rank(R) = k fails; bounds need not hold\n");
        }
        Ok(s)
    }
}

fn alt(rhs: Option<f64>, precondition_ok: bool) -> Alternate {
    Alternate {
        rhs,
        precondition_ok,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxvolBounds {
    /// Both index sets attain maximal volume (checked by enumeration).
    pub certified: bool,
    pub t_rows: f64,
    pub t_cols: f64,
    pub projection_rank: BoundReport,
    pub rank_u: BoundReport,
}

/// `(w, v)` for the leading `k` singular vectors of `a`.
pub fn singular_vector_terms(
    a: &DenseMatrix,
    k: usize,
    rows: &IndexSet,
    cols: &IndexSet,
    n: NormSpec,
) -> Result<(f64, f64)> {
    let f = svd(a);
    let rank = f.numerical_rank(RANK_TOL);
    if k == 0 || k > rank {
        return Err(CurError::RankOutOfRange { k, max: rank });
    }
    let wk_i = extract_cur(&f.w.leading_cols(k), rows, &IndexSet::full(k))?.r;
    let vk_j = extract_cur(&f.v.leading_cols(k), cols, &IndexSet::full(k))?.r;
    Ok((
        n.of(&pinv_spectrum(&singular_values(&wk_i))),
        n.of(&pinv_spectrum(&singular_values(&vk_j))),
    ))
}

pub fn bound_projection(
    a: &DenseMatrix,
    k: usize,
    rows: &IndexSet,
    cols: &IndexSet,
    e: &DenseMatrix,
    n: NormSpec,
) -> Result<BoundReport> {
    Ok(PerturbedInstance::new(a, e, k, rows, cols)?.bound_projection(n))
}

pub fn bound_thresholded(
    a: &DenseMatrix,
    k: usize,
    rows: &IndexSet,
    cols: &IndexSet,
    e: &DenseMatrix,
    tau: f64,
    n: NormSpec,
) -> Result<BoundReport> {
    PerturbedInstance::new(a, e, k, rows, cols)?.bound_thresholded(tau, n)
}

pub fn bound_plain(
    a: &DenseMatrix,
    k: usize,
    rows: &IndexSet,
    cols: &IndexSet,
    e: &DenseMatrix,
    n: NormSpec,
) -> Result<BoundReport> {
    Ok(PerturbedInstance::new(a, e, k, rows, cols)?.bound_plain(n))
}

pub fn bound_rank_u(
    a: &DenseMatrix,
    k: usize,
    rows: &IndexSet,
    cols: &IndexSet,
    e: &DenseMatrix,
    n: NormSpec,
) -> Result<BoundReport> {
    Ok(PerturbedInstance::new(a, e, k, rows, cols)?.bound_rank_u(n))
}

pub fn bound_projection_rank(
    a: &DenseMatrix,
    k: usize,
    rows: &IndexSet,
    cols: &IndexSet,
    e: &DenseMatrix,
    n: NormSpec,
) -> Result<BoundReport> {
    Ok(PerturbedInstance::new(a, e, k, rows, cols)?.bound_projection_rank(n))
}

pub fn bound_maxvol(
    a: &DenseMatrix,
    k: usize,
    rows: &IndexSet,
    cols: &IndexSet,
    e: &DenseMatrix,
    n: NormSpec,
) -> Result<MaxvolBounds> {
    PerturbedInstance::new(a, e, k, rows, cols)?.bound_maxvol(n)
}

fn same_shape(b: &DenseMatrix, bt: &DenseMatrix) -> Result<()> {
    if b.shape() != bt.shape() {
        return Err(CurError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            b.rows(),
            b.cols(),
            bt.rows(),
            bt.cols()
        )));
    }
    Ok(())
}

fn sv_gaps(b: &DenseMatrix, bt: &DenseMatrix) -> Vec<f64> {
    singular_values(b)
        .iter()
        .zip(singular_values(bt))
        .map(|(x, y)| (x - y).abs())
        .collect()
}

/// `max_j |sigma_j(B) - sigma_j(B̃)|`.
pub fn weyl_gap(b: &DenseMatrix, bt: &DenseMatrix) -> Result<f64> {
    same_shape(b, bt)?;
    Ok(sv_gaps(b, bt).into_iter().fold(0.0, f64::max))
}

/// Norm of the vector of singular value differences.
pub fn mirsky_gap(b: &DenseMatrix, bt: &DenseMatrix, p: Schatten) -> Result<f64> {
    same_shape(b, bt)?;
    Ok(p.of_spectrum(&sv_gaps(b, bt)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StewartBranch {
    EqualRank,
    RankChange,
}

/// One inequality `lhs <= rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    fn new(lhs: f64, rhs: f64, scale: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + BOUND_REL_SLACK) + BOUND_ABS_SLACK * scale,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StewartReport {
    pub branch: StewartBranch,
    pub rank_b: usize,
    pub rank_b_tilde: usize,
    pub mu: f64,
    /// `||B^+ - B̃^+|| <= mu ||B̃^+||_2 ||B^+||_2 ||E||` (equal rank) or
    /// `<= mu max(||B̃^+||_2^2, ||B^+||_2^2) ||E||` (rank change).
    pub upper: Inequality,
    /// Rank change only: `1/||E||_2 <= ||B^+ - B̃^+||_2`.
    pub lower: Option<Inequality>,
    /// Equal rank only: `| ||B^+|| - ||B̃^+|| | <= mu ||B^+||_2 ||B̃^+||_2 ||E||`.
    pub norm_gap: Option<Inequality>,
    /// Equal rank with `sigma_k(B) > mu ||E||`: the two-sided estimate
    /// `||B^+||/(1 + mu ||B^+||_2 ||E||) <= ||B̃^+|| <= ||B^+||/(1 - mu ||B^+||_2 ||E||)`.
    pub bracket: Option<(Inequality, Inequality)>,
}

impl StewartReport {
    pub fn all_hold(&self) -> bool {
        self.upper.holds
            && self.lower.is_none_or(|i| i.holds)
            && self.norm_gap.is_none_or(|i| i.holds)
            && self.bracket.is_none_or(|(a, b)| a.holds && b.holds)
    }
}

/// Pseudoinverse perturbation check for `B̃ = B + E`. Ranks use
/// [`RANK_TOL`], and the pseudoinverses drop the same values.
pub fn stewart_pinv_check(b: &DenseMatrix, bt: &DenseMatrix, n: NormSpec) -> Result<StewartReport> {
    same_shape(b, bt)?;
    let e = bt - b;
    let fb = svd(b);
    let fbt = svd(bt);
    let rank_b = fb.numerical_rank(RANK_TOL);
    let rank_bt = fbt.numerical_rank(RANK_TOL);
    let bp = fb.pinv(RANK_TOL);
    let btp = fbt.pinv(RANK_TOL);
    let diff = &bp - &btp;
    let diff_spec = singular_values(&diff);
    let e_spec = singular_values(&e);
    let e_n = n.of(&e_spec);
    let e_2 = Schatten::SPECTRAL.of_spectrum(&e_spec);
    let bp_spec = pinv_spectrum_tol(&fb.sigma, RANK_TOL);
    let btp_spec = pinv_spectrum_tol(&fbt.sigma, RANK_TOL);
    let bp2 = Schatten::SPECTRAL.of_spectrum(&bp_spec);
    let btp2 = Schatten::SPECTRAL.of_spectrum(&btp_spec);
    let mu = n.mu;
    let lhs = n.of(&diff_spec);
    let scale = bp2.max(btp2);

    if rank_b == rank_bt {
        let upper = Inequality::new(lhs, mu * btp2 * bp2 * e_n, scale);
        let bp_n = n.of(&bp_spec);
        let btp_n = n.of(&btp_spec);
        let norm_gap = Inequality::new((bp_n - btp_n).abs(), mu * bp2 * btp2 * e_n, scale);
        let sigma_k = if rank_b > 0 {
            fb.sigma[rank_b - 1]
        } else {
            0.0
        };
        let bracket = (rank_b > 0 && sigma_k > mu * e_n).then(|| {
            let lo = bp_n / (1.0 + mu * bp2 * e_n);
            let hi = bp_n / (1.0 - mu * bp2 * e_n);
            (
                Inequality::new(lo, btp_n, scale),
                Inequality::new(btp_n, hi, scale),
            )
        });
        Ok(StewartReport {
            branch: StewartBranch::EqualRank,
            rank_b,
            rank_b_tilde: rank_bt,
            mu,
            upper,
            lower: None,
            norm_gap: Some(norm_gap),
            bracket,
        })
    } else {
        let upper = Inequality::new(lhs, mu * bp2.max(btp2).powi(2) * e_n, scale);
        let diff2 = Schatten::SPECTRAL.of_spectrum(&diff_spec);
        let lower = Inequality::new(1.0 / e_2, diff2, scale);
        Ok(StewartReport {
            branch: StewartBranch::RankChange,
            rank_b,
            rank_b_tilde: rank_bt,
            mu,
            upper,
            lower: Some(lower),
            norm_gap: None,
            bracket: None,
        })
    }
}

fn pinv_spectrum_tol(sigma: &[f64], tol: f64) -> Vec<f64> {
    let cut = tol * sigma.first().copied().unwrap_or(0.0);
    sigma
        .iter()
        .filter(|&&s| s > cut)
        .map(|s| 1.0 / s)
        .collect()
}
