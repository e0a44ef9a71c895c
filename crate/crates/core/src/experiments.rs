//! Synthetic test matrices, the error-curve experiment runner, the rank
//! truncation counterexample and the Nyström truncation inequality.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bounds::{NormSpec, PerturbedInstance, BOUND_ABS_SLACK, BOUND_REL_SLACK};
use crate::cur::{approximate, extract_cur, truncated_pinv, CurVariant};
use crate::error::{CurError, Result};
use crate::index::IndexSet;
use crate::io::read_matrix;
use crate::linalg::{
    best_rank_k, numerical_rank, orthonormalize, singular_values, svd, truncated_svd, Schatten,
    SvdFactors, DEFAULT_PINV_TOL, RANK_TOL,
};
use crate::matrix::DenseMatrix;
use crate::sampling::{
    length_sample, leverage_sample, maxvol_select, uniform_sample, Axis, RngSeed,
};

fn gaussian(m: usize, n: usize, seed: RngSeed) -> DenseMatrix {
    let mut rng = seed.rng();
    let data = (0..m * n)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    DenseMatrix::from_col_major(m, n, data).expect("sizes agree")
}

/// `G_k G_k^T` for a Gaussian `n x n` matrix `G`: SPSD of rank exactly `k`.
pub fn gen_spsd_lowrank(n: usize, k: usize, seed: RngSeed) -> Result<DenseMatrix> {
    if k == 0 || k > n {
        return Err(CurError::RankOutOfRange { k, max: n });
    }
    let gk = best_rank_k(&gaussian(n, n, seed), k)?;
    Ok(gk.matmul(&gk.transpose()).symmetrize())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `H H^T`
    Spsd,
    /// `(H + H^T) / 2`
    Symmetric,
    /// `H` itself; works for rectangular shapes.
    Gaussian,
    None,
}

/// Noise built from a matrix `H` with i.i.d. `N(0, sigma^2)` entries.
pub fn gen_noise(
    rows: usize,
    cols: usize,
    kind: NoiseKind,
    sigma: f64,
    seed: RngSeed,
) -> Result<DenseMatrix> {
    if kind == NoiseKind::None {
        return Ok(DenseMatrix::zeros(rows, cols));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(CurError::invalid(format!(
            "noise sigma must be > 0, got {sigma}"
        )));
    }
    if kind != NoiseKind::Gaussian && rows != cols {
        return Err(CurError::invalid(format!(
            "{kind:?} noise needs a square shape, got {rows}x{cols}"
        )));
    }
    let h = gaussian(rows, cols, seed).scale(sigma);
    Ok(match kind {
        NoiseKind::Spsd => h.matmul(&h.transpose()).symmetrize(),
        NoiseKind::Symmetric => h.symmetrize(),
        _ => h,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    Exp,
    Poly,
}

/// The prescribed spectrum: `plateau` ones, then `exp(-c i)` or `i^-c` for
/// `i = plateau + 1 ..= n`.
pub fn decay_spectrum(n: usize, kind: Decay, c: f64, plateau: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| match kind {
            _ if i <= plateau => 1.0,
            Decay::Exp => (-c * i as f64).exp(),
            Decay::Poly => (i as f64).powf(-c),
        })
        .collect()
}

/// `W diag(decay_spectrum) V^T` with Haar-random orthogonal `W`, `V`.
pub fn gen_decay_spectrum(
    n: usize,
    kind: Decay,
    c: f64,
    plateau: usize,
    seed: RngSeed,
) -> Result<DenseMatrix> {
    if plateau >= n || !(c > 0.0) || !c.is_finite() {
        return Err(CurError::invalid(format!(
            "decay spectrum needs plateau < n and c > 0 (n={n}, plateau={plateau}, c={c})"
        )));
    }
    let w = orthonormalize(&gaussian(n, n, seed.derive(&[0])));
    let v = orthonormalize(&gaussian(n, n, seed.derive(&[1])));
    let sigma = decay_spectrum(n, kind, c, plateau);
    Ok(w.matmul(&DenseMatrix::from_diag(&sigma))
        .matmul(&v.transpose()))
}

/// `H(i, j) = 1 / (i + j - 1)`, 1-based.
pub fn gen_hilbert(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64)
}

/// `K(i, j) = exp(-||B(:, i) - B(:, j)||^2)`.
pub fn gen_gaussian_kernel(b: &DenseMatrix) -> DenseMatrix {
    let n = b.cols();
    let mut k = DenseMatrix::identity(n);
    for i in 0..n {
        for j in 0..i {
            let d2: f64 = b
                .col(i)
                .iter()
                .zip(b.col(j))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            let v = (-d2).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// `||A - Ahat|| / ||A||`.
pub fn relative_error(a: &DenseMatrix, ahat: &DenseMatrix, p: Schatten) -> Result<f64> {
    if a.shape() != ahat.shape() {
        return Err(CurError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            ahat.rows(),
            ahat.cols()
        )));
    }
    let denom = p.norm(a);
    if denom == 0.0 {
        return Err(CurError::invalid("relative error against a zero matrix"));
    }
    Ok(p.norm(&(a - ahat)) / denom)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// SPSD `n x n` of the configured rank.
    SpsdLowRank {
        n: usize,
    },
    DecaySpectrum {
        n: usize,
        decay: Decay,
        c: f64,
        #[serde(default = "default_plateau")]
        plateau: usize,
    },
    Hilbert {
        n: usize,
    },
    /// Gaussian kernel of the columns of a matrix file.
    GaussianKernel {
        path: PathBuf,
    },
    /// A matrix file used as is.
    File {
        path: PathBuf,
    },
}

fn default_plateau() -> usize {
    10
}

impl Generator {
    pub fn build(&self, k: usize, seed: RngSeed) -> Result<DenseMatrix> {
        match self {
            Generator::SpsdLowRank { n } => gen_spsd_lowrank(*n, k, seed),
            Generator::DecaySpectrum {
                n,
                decay,
                c,
                plateau,
            } => gen_decay_spectrum(*n, *decay, *c, *plateau, seed),
            Generator::Hilbert { n } => {
                if *n == 0 {
                    return Err(CurError::invalid("Hilbert size must be >= 1"));
                }
                Ok(gen_hilbert(*n))
            }
            Generator::GaussianKernel { path } => Ok(gen_gaussian_kernel(&read_matrix(path)?.0)),
            Generator::File { path } => Ok(read_matrix(path)?.0),
        }
    }

    fn is_symmetric_family(&self) -> bool {
        matches!(
            self,
            Generator::SpsdLowRank { .. }
                | Generator::Hilbert { .. }
                | Generator::GaussianKernel { .. }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    #[serde(default)]
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    Uniform,
    Length,
    Leverage,
    Maxvol,
}

fn default_variants() -> Vec<String> {
    vec![
        "post_truncated".into(),
        "rank_u".into(),
        "projection_rank".into(),
    ]
}

fn default_norm() -> Schatten {
    Schatten::SPECTRAL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: Generator,
    pub noise: NoiseConfig,
    /// Target rank `k`.
    pub rank: usize,
    pub column_counts: Vec<usize>,
    pub trials: usize,
    pub sampler: Sampler,
    #[serde(default = "default_norm")]
    pub norm: Schatten,
    pub seed: RngSeed,
    /// Variant labels; see [`CurVariant::from_parts`].
    #[serde(default = "default_variants")]
    pub variants: Vec<String>,
    /// Threshold for the `thresholded` variant.
    #[serde(default)]
    pub tau: Option<f64>,
    /// Use `I = J` (so `R̃ = C̃^T`). Defaults to true for symmetric generators.
    #[serde(default)]
    pub symmetric: Option<bool>,
    /// Also evaluate the matching perturbation bound (needs `rank(A) = k`).
    #[serde(default)]
    pub bounds: bool,
}

impl ExperimentConfig {
    /// Parses JSON (first non-blank character `{`) or TOML.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| CurError::Parse {
                line: e.line(),
                msg: e.to_string(),
            })?
        } else {
            toml::from_str(text).map_err(|e| CurError::Parse {
                line: e
                    .span()
                    .map_or(0, |s| text[..s.start].matches('\n').count() + 1),
                msg: e.message().to_string(),
            })?
        };
        cfg.check_static()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn variant_list(&self) -> Result<Vec<CurVariant>> {
        let list = self
            .variants
            .iter()
            .map(|v| CurVariant::from_parts(v, Some(self.rank), self.tau))
            .collect::<Result<Vec<_>>>()?;
        let mut labels: Vec<_> = list.iter().map(|v| v.label()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(CurError::invalid("duplicate variant in config"));
        }
        Ok(list)
    }

    /// Checks that need no matrix.
    fn check_static(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(CurError::invalid("trials must be >= 1"));
        }
        if self.rank == 0 {
            return Err(CurError::invalid("rank must be >= 1"));
        }
        if self.column_counts.is_empty() {
            return Err(CurError::invalid("column_counts is empty"));
        }
        if let Some(c) = self.column_counts.iter().find(|&&c| c < self.rank) {
            return Err(CurError::invalid(format!(
                "column count {c} is below the rank {}",
                self.rank
            )));
        }
        if self.noise.kind != NoiseKind::None && !(self.noise.sigma > 0.0) {
            return Err(CurError::invalid("noise sigma must be > 0"));
        }
        if self.variants.is_empty() {
            return Err(CurError::invalid("no variants configured"));
        }
        self.variant_list().map(|_| ())
    }

    fn use_symmetric(&self) -> bool {
        self.symmetric
            .unwrap_or_else(|| self.generator.is_symmetric_family())
    }
}

/// Label of the truncated-SVD reference curve.
pub const SVD_BASELINE: &str = "svd";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub variant: String,
    pub column_count: usize,
    pub trial: usize,
    pub relative_error: f64,
    /// Bound right-hand side divided by `||A||`, when requested and defined.
    pub bound_rhs: Option<f64>,
    pub precondition_ok: Option<bool>,
    pub seed: u64,
}

/// A fully generated experiment: ground truth, observation and the runner.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub a: DenseMatrix,
    pub a_tilde: DenseMatrix,
    variants: Vec<CurVariant>,
    symmetric: bool,
    /// Truncated SVD of `Ã` for maxvol selection.
    maxvol: Option<SvdFactors>,
    a_norm: f64,
    baseline: f64,
}

impl Experiment {
    /// Generates the matrices and validates everything against them.
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        config.check_static()?;
        let a = config
            .generator
            .build(config.rank, config.seed.derive(&[u64::MAX, 0]))?;
        let (m, n) = a.shape();
        let symmetric = config.use_symmetric();
        if symmetric && !a.is_symmetric(0.0) {
            return Err(CurError::invalid(
                "symmetric sampling needs a symmetric matrix",
            ));
        }
        if config.rank > m.min(n) {
            return Err(CurError::RankOutOfRange {
                k: config.rank,
                max: m.min(n),
            });
        }
        let max_count = if symmetric { n } else { m.min(n) };
        if config.sampler == Sampler::Maxvol {
            if let Some(c) = config.column_counts.iter().find(|&&c| c > max_count) {
                return Err(CurError::invalid(format!(
                    "maxvol count {c} exceeds the dimension {max_count}"
                )));
            }
        }
        let e = gen_noise(
            m,
            n,
            config.noise.kind,
            config.noise.sigma,
            config.seed.derive(&[u64::MAX, 1]),
        )?;
        let a_tilde = &a + &e;
        let a_norm = config.norm.norm(&a);
        if a_norm == 0.0 {
            return Err(CurError::invalid("ground truth matrix is zero"));
        }
        let baseline = relative_error(&a, &best_rank_k(&a_tilde, config.rank)?, config.norm)?;
        let maxvol = match config.sampler {
            Sampler::Maxvol => Some(truncated_svd(&a_tilde, config.rank)?),
            _ => None,
        };
        Ok(Self {
            variants: config.variant_list()?,
            config: config.clone(),
            a,
            a_tilde,
            symmetric,
            maxvol,
            a_norm,
            baseline,
        })
    }

    /// `||A - Ã_k|| / ||A||`.
    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    fn basis(&self) -> &SvdFactors {
        self.maxvol.as_ref().expect("prepared for maxvol")
    }

    fn select(&self, count: usize, seed: RngSeed) -> Result<(IndexSet, IndexSet)> {
        let at = &self.a_tilde;
        let k = self.config.rank;
        let (m, n) = at.shape();
        let rs = seed.derive(&[0]);
        let cs = seed.derive(&[1]);
        let cols = match self.config.sampler {
            Sampler::Uniform => uniform_sample(n, count, cs)?,
            Sampler::Length => length_sample(at, count, Axis::Cols, cs)?,
            Sampler::Leverage => leverage_sample(at, count, k, Axis::Cols, cs)?,
            Sampler::Maxvol => maxvol_select(&self.basis().v, count)?,
        };
        if self.symmetric {
            return Ok((cols.clone(), cols));
        }
        let rows = match self.config.sampler {
            Sampler::Uniform => uniform_sample(m, count, rs)?,
            Sampler::Length => length_sample(at, count, Axis::Rows, rs)?,
            Sampler::Leverage => leverage_sample(at, count, k, Axis::Rows, rs)?,
            Sampler::Maxvol => maxvol_select(&self.basis().w, count)?,
        };
        Ok((rows, cols))
    }

    /// One `(trial, count)` cell: the baseline followed by every variant.
    pub fn run_trial(&self, trial: usize, count: usize) -> Result<Vec<TrialResult>> {
        let seed = self.config.seed.derive(&[trial as u64, count as u64]);
        let (rows, cols) = self.select(count, seed)?;
        let f = extract_cur(&self.a_tilde, &rows, &cols)?;
        let row = |variant: &str, err: f64, rhs: Option<f64>, ok: Option<bool>| TrialResult {
            variant: variant.to_string(),
            column_count: count,
            trial,
            relative_error: err,
            bound_rhs: rhs,
            precondition_ok: ok,
            seed: seed.0,
        };
        let mut out = vec![row(SVD_BASELINE, self.baseline, None, None)];

        let instance =
            if self.config.bounds && numerical_rank(&self.a, RANK_TOL) == self.config.rank {
                Some(PerturbedInstance::new(
                    &self.a,
                    &(&self.a_tilde - &self.a),
                    self.config.rank,
                    &rows,
                    &cols,
                )?)
            } else {
                None
            };
        let norm = NormSpec::new(self.config.norm);

        for v in &self.variants {
            let approx = approximate(&f, Some(&self.a_tilde), *v)?;
            let err = relative_error(&self.a, &approx, self.config.norm)?;
            let (rhs, ok) = match &instance {
                Some(inst) => {
                    let report = match *v {
                        CurVariant::Plain => Some(inst.bound_plain(norm)),
                        CurVariant::Thresholded { tau } => Some(inst.bound_thresholded(tau, norm)?),
                        CurVariant::RankU { .. } => Some(inst.bound_rank_u(norm)),
                        CurVariant::Projection => Some(inst.bound_projection(norm)),
                        CurVariant::ProjectionRank { .. } => Some(inst.bound_projection_rank(norm)),
                        CurVariant::PostTruncated { .. } => None,
                    };
                    match report {
                        Some(r) => (r.rhs.map(|x| x / self.a_norm), Some(r.precondition_ok)),
                        None => (None, None),
                    }
                }
                None => (None, None),
            };
            out.push(row(v.label(), err, rhs, ok));
        }
        Ok(out)
    }

    pub fn run(&self) -> Result<Vec<TrialResult>> {
        let mut out = Vec::new();
        for &count in &self.config.column_counts {
            for trial in 0..self.config.trials {
                out.extend(self.run_trial(trial, count)?);
            }
        }
        Ok(out)
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    Experiment::prepare(config)?.run()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub variant: String,
    pub column_count: usize,
    pub trials: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Mean, min and max of the relative error per `(variant, column_count)`,
/// sorted by variant then count.
pub fn summarize(results: &[TrialResult]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, usize), Vec<f64>> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.variant.as_str(), r.column_count))
            .or_default()
            .push(r.relative_error);
    }
    groups
        .into_iter()
        .map(|((variant, column_count), errs)| SummaryRow {
            variant: variant.to_string(),
            column_count,
            trials: errs.len(),
            mean: errs.iter().sum::<f64>() / errs.len() as f64,
            min: errs.iter().copied().fold(f64::INFINITY, f64::min),
            max: errs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect()
}

/// Mean error of one `(variant, count)` cell.
pub fn mean_error(summary: &[SummaryRow], variant: &str, count: usize) -> Option<f64> {
    summary
        .iter()
        .find(|s| s.variant == variant && s.column_count == count)
        .map(|s| s.mean)
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn results_csv(results: &[TrialResult]) -> String {
    let mut s =
        String::from("variant,column_count,trial,relative_error,bound_rhs,precondition_ok\n");
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.variant,
            r.column_count,
            r.trial,
            fmt17(r.relative_error),
            r.bound_rhs.map(fmt17).unwrap_or_default(),
            r.precondition_ok.map(|b| b.to_string()).unwrap_or_default(),
        );
    }
    s
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config: &'a ExperimentConfig,
    summary: &'a [SummaryRow],
}

pub fn summary_json(config: &ExperimentConfig, summary: &[SummaryRow]) -> String {
    serde_json::to_string_pretty(&SummaryFile { config, summary }).expect("plain data serializes")
}

/// Writes `results.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, results: &[TrialResult]) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("results.csv"), results_csv(results))?;
    fs::write(
        dir.join("summary.json"),
        summary_json(config, &summarize(results)),
    )?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct NormComparison {
    pub p: Schatten,
    /// `||A - (C U^+ R)_1||`
    pub post_truncated: f64,
    /// `||A - C U_1^+ R||`
    pub rank_u: f64,
    pub rank_u_smaller: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub epsilon: f64,
    /// Singular values of `A - (C U^+ R)_1`.
    pub post_truncated_spectrum: Vec<f64>,
    /// Singular values of `A - C U_1^+ R`.
    pub rank_u_spectrum: Vec<f64>,
    pub norms: Vec<NormComparison>,
    pub pass: bool,
}

/// `[[-1, 0, 10], [0, 1 + eps, 0], [10, 0, 100]]`.
pub fn counterexample_matrix(epsilon: f64) -> DenseMatrix {
    DenseMatrix::from_rows(&[
        [-1.0, 0.0, 10.0],
        [0.0, 1.0 + epsilon, 0.0],
        [10.0, 0.0, 100.0],
    ])
    .expect("rectangular literal")
}

/// Rank-1 truncation after the product versus truncation of `U`, with `C`,
/// `R` the first two columns and rows.
pub fn rank_truncation_counterexample(epsilon: f64) -> Result<CounterexampleReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CurError::invalid(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let a = counterexample_matrix(epsilon);
    let idx = IndexSet::new(vec![0, 1], 3)?;
    let f = extract_cur(&a, &idx, &idx)?;
    let post = approximate(&f, None, CurVariant::PostTruncated { k: 1 })?;
    let ranku = approximate(&f, None, CurVariant::RankU { k: 1 })?;
    let s_post = singular_values(&(&a - &post));
    let s_ranku = singular_values(&(&a - &ranku));
    let norms: Vec<_> = [Schatten::NUCLEAR, Schatten::FROBENIUS, Schatten::SPECTRAL]
        .into_iter()
        .map(|p| {
            let post_truncated = p.of_spectrum(&s_post);
            let rank_u = p.of_spectrum(&s_ranku);
            NormComparison {
                p,
                post_truncated,
                rank_u,
                rank_u_smaller: rank_u < post_truncated,
            }
        })
        .collect();
    Ok(CounterexampleReport {
        epsilon,
        pass: norms.iter().all(|n| n.rank_u_smaller),
        post_truncated_spectrum: s_post,
        rank_u_spectrum: s_ranku,
        norms,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BeckerReport {
    pub rank: usize,
    /// `||K - (C U^+ R)_r||_*`
    pub truncate_after: f64,
    /// `||K - C U_r^+ R||_*`
    pub truncate_middle: f64,
    /// `truncate_after <= truncate_middle`
    pub holds: bool,
}

/// Compares `||A - (C U^+ R)_r||_*` with `||A - C U_r^+ R||_*` for arbitrary
/// `(I, J)`.
pub fn becker_general(
    a: &DenseMatrix,
    rows: &IndexSet,
    cols: &IndexSet,
    r: usize,
) -> Result<BeckerReport> {
    let f = extract_cur(a, rows, cols)?;
    let after = approximate(&f, None, CurVariant::PostTruncated { k: r })?;
    let middle = f.c.matmul(&truncated_pinv(&svd(&f.u), r).matmul(&f.r));
    let truncate_after = Schatten::NUCLEAR.norm(&(a - &after));
    let truncate_middle = Schatten::NUCLEAR.norm(&(a - &middle));
    let scale = Schatten::NUCLEAR.norm(a);
    Ok(BeckerReport {
        rank: r,
        truncate_after,
        truncate_middle,
        holds: truncate_after
            <= truncate_middle * (1.0 + BOUND_REL_SLACK) + BOUND_ABS_SLACK * scale,
    })
}

/// `B` with `C U_r^+ C^T = B B^T` for SPSD `U = V diag(s) V^T`, i.e.
/// `B = C V_r diag(s_r)^(-1/2)`; all values above the cutoff when `r` is `None`.
fn nystrom_factor(c: &DenseMatrix, u: &DenseMatrix, r: Option<usize>) -> DenseMatrix {
    let f = svd(u);
    let cut = DEFAULT_PINV_TOL * f.sigma.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..r.unwrap_or(f.r()).min(f.r()))
        .filter(|&i| f.sigma[i] > cut)
        .collect();
    let mut b = c.matmul(&f.v.select_cols(&keep));
    for (j, &i) in keep.iter().enumerate() {
        let s = f.sigma[i].sqrt();
        b.col_mut(j).iter_mut().for_each(|x| *x /= s);
    }
    b
}

/// Nyström form: `C = K(:, J)`, `U = K(J, J)`, `R = C^T`. Both products go
/// through square-root factors `B B^T`, which stay accurate when `U` is
/// ill conditioned.
pub fn becker_check(k: &DenseMatrix, cols: &IndexSet, r: usize) -> Result<BeckerReport> {
    if !k.is_symmetric(0.0) {
        return Err(CurError::invalid("Nyström check needs a symmetric matrix"));
    }
    let f = extract_cur(k, cols, cols)?;
    if r == 0 || r > cols.len() {
        return Err(CurError::RankOutOfRange {
            k: r,
            max: cols.len(),
        });
    }
    let b = svd(&nystrom_factor(&f.c, &f.u, None)).truncate(r);
    let bw = b.w.matmul(&DenseMatrix::from_diag(&b.sigma));
    let after = bw.matmul(&bw.transpose());
    let br = nystrom_factor(&f.c, &f.u, Some(r));
    let middle = br.matmul(&br.transpose());
    let truncate_after = Schatten::NUCLEAR.norm(&(k - &after));
    let truncate_middle = Schatten::NUCLEAR.norm(&(k - &middle));
    let scale = Schatten::NUCLEAR.norm(k);
    Ok(BeckerReport {
        rank: r,
        truncate_after,
        truncate_middle,
        holds: truncate_after
            <= truncate_middle * (1.0 + BOUND_REL_SLACK) + BOUND_ABS_SLACK * scale,
    })
}
