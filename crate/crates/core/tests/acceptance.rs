//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances and budgets are pinned below.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::{distinct, gaussian, low_rank, random_instance, scaled_noise};
use cur_core::bounds::{
    mirsky_gap, stewart_pinv_check, weyl_gap, BoundReport, NormSpec, PerturbedInstance,
    StewartBranch,
};
use cur_core::cur::{check_identities, verify_exact_cur};
use cur_core::experiments::{
    becker_check, becker_general, counterexample_matrix, gen_hilbert, gen_noise, gen_spsd_lowrank,
    mean_error, rank_truncation_counterexample, run_experiment, summarize, ExperimentConfig,
    Generator, NoiseConfig, NoiseKind, Sampler, SVD_BASELINE,
};
use cur_core::linalg::{pinv, svd, Schatten};
use cur_core::sampling::{exhaustive_maxvol, t_factor, t_factor_frobenius, RngSeed};
use cur_core::{DenseMatrix, IndexSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NORMS: [Schatten; 3] = [Schatten::NUCLEAR, Schatten::FROBENIUS, Schatten::SPECTRAL];

const C1_SPECTRUM_TOL: f64 = 1e-10;
const C1_APPROX_TOL: f64 = 1e-3;
const C1_BUDGET: Duration = Duration::from_secs(1);

const C2_INSTANCES: usize = 200;
const C2_TOL: f64 = 1e-8;
const C2_BUDGET: Duration = Duration::from_secs(30);

const C3_INSTANCES: usize = 100;
const C3_TOL: f64 = 1e-8;
const C3_BUDGET: Duration = Duration::from_secs(30);

const C4_PER_BOUND: usize = 500;
const C4_MAX_ATTEMPTS: usize = 20_000;
const C4_BUDGET: Duration = Duration::from_secs(600);

const C5_PAIRS: usize = 200;
const C5_BUDGET: Duration = Duration::from_secs(60);

const C6_INSTANCES: usize = 200;
const C6_BUDGET: Duration = Duration::from_secs(120);

const C7_BUDGET: Duration = Duration::from_secs(300);
const C8_INSTANCES: usize = 50;
const C8_BUDGET: Duration = Duration::from_secs(60);

const C9_MARGIN: f64 = 10.0;
const C9_BUDGET: Duration = Duration::from_secs(300);

const C10_TOL: f64 = 1e-14;
const C10_BUDGET: Duration = Duration::from_secs(60);

/// Relative slack for every lemma and classical inequality check.
const SLACK: f64 = 1e-8;

fn le(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs <= rhs * (1.0 + SLACK) + 1e-10 * scale
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion_1() -> Outcome {
    let r = rank_truncation_counterexample(0.5).unwrap();
    let exact = [200.0, 1.5, 0.0];
    let approx = [100.9806, 1.9806, 0.0];
    let ok_exact = r
        .post_truncated_spectrum
        .iter()
        .zip(exact)
        .all(|(g, w)| (g - w).abs() <= C1_SPECTRUM_TOL);
    let ok_approx = r
        .rank_u_spectrum
        .iter()
        .zip(approx)
        .all(|(g, w)| (g - w).abs() <= C1_APPROX_TOL);
    let ok_norms = r.norms.iter().all(|n| {
        (200.0..=202.0).contains(&n.post_truncated) && (100.0..=103.0).contains(&n.rank_u)
    });
    let grid = [0.1, 0.25, 0.5, 0.75, 0.9]
        .iter()
        .all(|&eps| rank_truncation_counterexample(eps).unwrap().pass);
    outcome(
        ok_exact && ok_approx && ok_norms && grid && r.pass,
        format!(
            "(CU+R)_1 residual spectrum {:?}, CU_1+R residual spectrum {:?}",
            r.post_truncated_spectrum, r.rank_u_spectrum
        ),
    )
}

/// Rank-`k` matrix plus index sets; when `deficient`, the rows at `I` are
/// forced into a `(k-1)`-dimensional space so that rank(U) < k.
fn exactness_instance(rng: &mut ChaCha8Rng, deficient: bool) -> (DenseMatrix, IndexSet, IndexSet) {
    let k = rng.random_range(if deficient { 2 } else { 1 }..=6);
    let m = rng.random_range(k + 2..=60);
    let n = rng.random_range(k + 2..=60);
    let mut x = gaussian(m, k, rng);
    let y = gaussian(k, n, rng);
    // |I| < m, so a deficient I cannot drag rank(A) down with it.
    let rows = distinct(m, rng.random_range(k..=(m - 1).min(k + 10)), rng);
    let cols = distinct(n, rng.random_range(k..=n.min(k + 10)), rng);
    if deficient {
        let basis = gaussian(k - 1, k, rng);
        for &i in rows.as_slice() {
            let coeff = gaussian(1, k - 1, rng).matmul(&basis);
            for j in 0..k {
                x[(i, j)] = coeff[(0, j)];
            }
        }
    }
    (x.matmul(&y), rows, cols)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut agree = 0;
    let mut exact = 0;
    for t in 0..C2_INSTANCES {
        let (a, rows, cols) = exactness_instance(&mut rng, t % 2 == 1);
        let r = verify_exact_cur(&a, &rows, &cols, C2_TOL).unwrap();
        if r.consistent() {
            agree += 1;
        }
        if r.is_exact() {
            exact += 1;
        }
    }
    outcome(
        agree == C2_INSTANCES && exact == C2_INSTANCES / 2,
        format!("{agree}/{C2_INSTANCES} consistent, {exact} exact"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pass = 0;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..C3_INSTANCES {
        let (a, rows, cols) = exactness_instance(&mut rng, false);
        let r = check_identities(&a, &rows, &cols, C3_TOL).unwrap();
        checked = r.residuals.len();
        worst = r.residuals.values().copied().fold(worst, f64::max);
        if r.precondition_ok && r.all_pass() {
            pass += 1;
        }
    }
    outcome(
        pass == C3_INSTANCES,
        format!("{pass}/{C3_INSTANCES} instances, {checked} residuals each, worst {worst:.2e}"),
    )
}

/// Evaluation counts and violations per `(check, norm)`.
#[derive(Default)]
struct Tally {
    evaluated: BTreeMap<String, usize>,
    violated: BTreeMap<String, usize>,
    worst_ratio: BTreeMap<String, f64>,
}

impl Tally {
    fn record(&mut self, name: &str, p: Schatten, result: Option<bool>, ratio: f64) {
        let key = format!("{name}[p={p}]");
        if let Some(ok) = result {
            *self.evaluated.entry(key.clone()).or_default() += 1;
            if !ok {
                *self.violated.entry(key.clone()).or_default() += 1;
            }
            let w = self.worst_ratio.entry(key).or_insert(0.0);
            *w = w.max(ratio);
        }
    }

    fn main(&mut self, name: &str, r: &BoundReport) {
        let ratio = r.rhs.map_or(0.0, |rhs| r.lhs_measured / rhs);
        self.record(name, r.norm, r.holds(), ratio);
    }

    fn alt(&mut self, name: &str, r: &BoundReport, alt: &str) {
        let ratio = r.alternates[alt]
            .rhs
            .map_or(0.0, |rhs| r.lhs_measured / rhs);
        self.record(
            &format!("{name}.{alt}"),
            r.norm,
            r.alternate_holds(alt),
            ratio,
        );
    }

    fn min_evaluated(&self, names: &[String]) -> usize {
        names
            .iter()
            .flat_map(|n| NORMS.map(|p| format!("{n}[p={p}]")))
            .map(|k| self.evaluated.get(&k).copied().unwrap_or(0))
            .min()
            .unwrap_or(0)
    }
}

const C4_GENERAL: [&str; 11] = [
    "projection",
    "projection.simplified",
    "thresholded_0",
    "thresholded_0.spectral_factors",
    "thresholded_e2",
    "thresholded_e2.spectral_factors",
    "plain.simplified",
    "rank_u",
    "rank_u.u_independent",
    "rank_u.linear",
    "projection_rank",
];
const C4_MAXVOL: [&str; 2] = ["maxvol_projection_rank", "maxvol_rank_u"];

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut tally = Tally::default();
    let general: Vec<String> = C4_GENERAL.iter().map(|s| s.to_string()).collect();
    let mut attempts = 0;
    while tally.min_evaluated(&general) < C4_PER_BOUND && attempts < C4_MAX_ATTEMPTS {
        attempts += 1;
        let inst = random_instance(&mut rng, 30, 5, (-7.0, -0.5));
        for p in NORMS {
            let n = NormSpec::new(p);
            let r = inst.bound_projection(n);
            tally.main("projection", &r);
            tally.alt("projection", &r, "simplified");
            let tau = r.term("e_2");
            for (name, t) in [("thresholded_0", 0.0), ("thresholded_e2", tau)] {
                let r = inst.bound_thresholded(t, n).unwrap();
                tally.main(name, &r);
                tally.alt(name, &r, "spectral_factors");
            }
            let r = inst.bound_plain(n);
            tally.main("plain", &r);
            tally.alt("plain", &r, "simplified");
            let r = inst.bound_rank_u(n);
            tally.main("rank_u", &r);
            tally.alt("rank_u", &r, "u_independent");
            tally.alt("rank_u", &r, "linear");
            let r = inst.bound_projection_rank(n);
            tally.main("projection_rank", &r);
            tally.alt("projection_rank", &r, "simplified");
        }
    }
    let general_attempts = attempts;

    let maxvol: Vec<String> = C4_MAXVOL.iter().map(|s| s.to_string()).collect();
    attempts = 0;
    while tally.min_evaluated(&maxvol) < C4_PER_BOUND && attempts < C4_MAX_ATTEMPTS {
        attempts += 1;
        let k = rng.random_range(1..=3);
        let m = rng.random_range(k + 1..=12);
        let n = if rng.random_bool(0.3) {
            m
        } else {
            rng.random_range(k + 1..=12)
        };
        let a = low_rank(m, n, k, &mut rng);
        let delta = 10f64.powf(rng.random_range(-7.0..-2.0));
        let e = scaled_noise(&a, k, delta, &mut rng);
        let f = svd(&a);
        let si = rng.random_range(k..=m);
        let sj = if m == n && rng.random_bool(0.5) {
            si
        } else {
            rng.random_range(k..=n)
        };
        let (rows, _) = exhaustive_maxvol(&f.w.leading_cols(k), si).unwrap();
        let (cols, _) = exhaustive_maxvol(&f.v.leading_cols(k), sj).unwrap();
        let inst = PerturbedInstance::new(&a, &e, k, &rows, &cols).unwrap();
        for p in NORMS {
            let mb = inst.bound_maxvol(NormSpec::new(p)).unwrap();
            assert!(mb.certified);
            tally.main("maxvol_projection_rank", &mb.projection_rank);
            tally.main("maxvol_rank_u", &mb.rank_u);
            if mb.projection_rank.alternates.contains_key("square") {
                tally.alt("maxvol_projection_rank", &mb.projection_rank, "square");
                tally.alt("maxvol_rank_u", &mb.rank_u, "square");
            }
        }
    }

    let mut lines = Vec::new();
    for (key, count) in &tally.evaluated {
        let bad = tally.violated.get(key).copied().unwrap_or(0);
        lines.push(format!(
            "    {key:<44} evaluated {count:>5}  violated {bad:>4}  max lhs/rhs {:.4}",
            tally.worst_ratio[key]
        ));
    }
    let enough = tally.min_evaluated(&general) >= C4_PER_BOUND
        && tally.min_evaluated(&maxvol) >= C4_PER_BOUND;
    let clean = tally.violated.values().all(|&v| v == 0);
    outcome(
        enough && clean,
        format!(
            "{general_attempts} general + {attempts} maxvol instances\n{}",
            lines.join("\n")
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut fails = BTreeMap::<&str, usize>::new();
    let mut counts = BTreeMap::<&str, usize>::new();
    let mut bump = |name: &'static str, ok: bool, counts: &mut BTreeMap<&str, usize>| {
        *counts.entry(name).or_default() += 1;
        if !ok {
            *fails.entry(name).or_default() += 1;
        }
    };
    for _ in 0..C5_PAIRS {
        let m = rng.random_range(2..=25);
        let n = rng.random_range(2..=25);
        let b = gaussian(m, n, &mut rng);
        let e = gaussian(m, n, &mut rng).scale(10f64.powf(rng.random_range(-4.0..0.0)));
        let bt = &b + &e;
        bump(
            "weyl",
            le(weyl_gap(&b, &bt).unwrap(), Schatten::SPECTRAL.norm(&e), 1.0),
            &mut counts,
        );
        for p in NORMS {
            bump(
                "mirsky",
                le(mirsky_gap(&b, &bt, p).unwrap(), p.norm(&e), 1.0),
                &mut counts,
            );
        }
    }
    // Equal rank: perturb the factors of a rank-r matrix.
    let mut equal = 0;
    let mut bracket = 0;
    while equal < C5_PAIRS {
        let r = rng.random_range(1..=5);
        let m = rng.random_range(r..=20);
        let n = rng.random_range(r..=20);
        let x = gaussian(m, r, &mut rng);
        let y = gaussian(r, n, &mut rng);
        let s = 10f64.powf(rng.random_range(-5.0..-1.0));
        let xt = &x + &gaussian(m, r, &mut rng).scale(s);
        let b = x.matmul(&y);
        let bt = xt.matmul(&y);
        for p in NORMS {
            let rep = stewart_pinv_check(&b, &bt, NormSpec::new(p)).unwrap();
            if rep.branch != StewartBranch::EqualRank {
                continue;
            }
            bump("stewart_equal", rep.upper.holds, &mut counts);
            bump("norm_gap", rep.norm_gap.unwrap().holds, &mut counts);
            if let Some((lo, hi)) = rep.bracket {
                bracket += 1;
                bump("bracket", lo.holds && hi.holds, &mut counts);
            }
        }
        equal += 1;
    }
    // Rank change: full noise on a rank-deficient matrix, and exact rank drops.
    for i in 0..C5_PAIRS {
        let r = rng.random_range(1..=5);
        let m = rng.random_range(r + 1..=20);
        let n = rng.random_range(r + 1..=20);
        let b = gaussian(m, r, &mut rng).matmul(&gaussian(r, n, &mut rng));
        let bt = if i % 2 == 0 {
            &b + &gaussian(m, n, &mut rng).scale(10f64.powf(rng.random_range(-6.0..-1.0)))
        } else {
            let f = svd(&b);
            f.reconstruct_filtered({
                let drop = f.sigma[r - 1];
                move |s| s > drop
            })
        };
        for p in NORMS {
            let rep = stewart_pinv_check(&b, &bt, NormSpec::new(p)).unwrap();
            bump(
                "rank_change_branch",
                rep.branch == StewartBranch::RankChange,
                &mut counts,
            );
            bump("stewart_rank_change", rep.upper.holds, &mut counts);
            if let Some(lower) = rep.lower {
                bump(
                    if i % 2 == 0 {
                        "lower_bound_noise"
                    } else {
                        "lower_bound_drop"
                    },
                    lower.holds,
                    &mut counts,
                );
            }
        }
    }
    let clean = fails.is_empty() && bracket > 0;
    outcome(clean, format!("checks {counts:?}; failures {fails:?}"))
}

/// Orthogonal projector onto the range of `c`, from its left singular vectors.
fn col_projector(c: &DenseMatrix) -> DenseMatrix {
    let f = svd(c);
    let keep: Vec<usize> = (0..f.r())
        .filter(|&i| f.sigma[i] > 1e-12 * f.sigma[0])
        .collect();
    let w = f.w.select_cols(&keep);
    w.matmul(&w.transpose())
}

/// Projector onto the leading `k` left singular vectors of `c`.
fn rank_k_projector(c: &DenseMatrix, k: usize) -> DenseMatrix {
    let w = svd(c).w.leading_cols(k.min(c.cols()));
    w.matmul(&w.transpose())
}

type Counts = BTreeMap<String, (usize, usize)>;

fn note(counts: &mut Counts, name: &str, p: Schatten, ok: bool) {
    let e = counts.entry(format!("{name}[p={p}]")).or_default();
    e.0 += 1;
    if !ok {
        e.1 += 1;
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut counts = Counts::new();
    for _ in 0..C6_INSTANCES {
        let inst = random_instance(&mut rng, 25, 4, (-6.0, -0.7));
        let (a, at, k) = (&inst.a, &inst.a_tilde, inst.k);
        let (ct, rt, ut) = (&inst.noisy.c, &inst.noisy.r, &inst.noisy.u);
        let e = at - a;
        let scale = Schatten::NUCLEAR.norm(a);
        let pc = col_projector(ct);
        let pr = col_projector(&rt.transpose());
        let pck = rank_k_projector(ct, k);
        let prk = rank_k_projector(&rt.transpose(), k);
        let fu = svd(ut);
        let cut = 1e-12 * fu.sigma[0];
        let tau_e2 = Schatten::SPECTRAL.norm(&e);
        let ut_pinv = [
            (0.0, fu.pinv_filtered(|s| s > cut)),
            (tau_e2, fu.pinv_filtered(|s| s >= tau_e2 && s > cut)),
        ];
        let q = cur_core::linalg::orthonormalize(&gaussian(
            a.rows(),
            rng.random_range(1..=a.rows()),
            &mut rng,
        ));
        let p_rand = q.matmul(&q.transpose());

        for p in NORMS {
            let n = NormSpec::new(p);
            let terms = inst.bound_projection(n);
            let (ej, ei, ee) = (terms.term("e_j"), terms.term("e_i"), terms.term("e"));
            let (cpa, arp) = (terms.term("c_pinv_a"), terms.term("a_r_pinv"));
            let (w, v, eij) = (terms.term("w"), terms.term("v"), terms.term("e_ij"));
            let c = &mut counts;

            note(
                c,
                "projection_cols",
                p,
                le(p.norm(&(a - &pc.matmul(at))), ej * cpa + ee, scale),
            );
            note(
                c,
                "projection_rows",
                p,
                le(p.norm(&(a - &at.matmul(&pr))), ei * arp + ee, scale),
            );

            for (tau, up) in &ut_pinv {
                let utp = inst.bound_thresholded(*tau, n).unwrap().term("ut_tau_pinv");
                let lhs = p.norm(&inst.clean.c.matmul(up));
                note(c, "c_ut_pinv", p, le(lhs, utp * eij * w + w, 1.0));
                let lhs = p.norm(&up.matmul(rt));
                note(c, "ut_pinv_r", p, le(lhs, utp * (eij * v + ei) + v, 1.0));
            }

            let lhs = p.norm(&(at - &p_rand.matmul(at)));
            let rhs = p.norm(&(a - &p_rand.matmul(a))) + ee;
            note(c, "projector_shift", p, le(lhs, rhs, scale));

            note(
                c,
                "rank_k_projection_cols",
                p,
                le(p.norm(&(a - &pck.matmul(at))), 2.0 * ej * cpa + ee, scale),
            );
            note(
                c,
                "rank_k_projection_rows",
                p,
                le(p.norm(&(a - &at.matmul(&prk))), 2.0 * ei * arp + ee, scale),
            );
        }
    }

    // The U_k^+ estimate needs sigma_k(U) > 2 mu ||E_IJ||, which the nuclear
    // norm rarely meets at large noise; sample lower noise until every norm
    // has its quota.
    let ut_k_count = |c: &Counts| {
        NORMS
            .iter()
            .map(|p| c.get(&format!("ut_k_pinv[p={p}]")).map_or(0, |x| x.0))
            .min()
            .unwrap()
    };
    let mut tries = 0;
    while ut_k_count(&counts) < C6_INSTANCES && tries < 50 * C6_INSTANCES {
        tries += 1;
        let inst = random_instance(&mut rng, 25, 4, (-7.0, -1.5));
        let ut_k_pinv = svd(&inst.noisy.u)
            .truncate(inst.k)
            .pinv_filtered(|s| s > 0.0);
        for p in NORMS {
            let n = NormSpec::new(p);
            let ru = inst.bound_rank_u(n);
            if ru.precondition_ok {
                let rhs =
                    ru.term("u_pinv") / (1.0 - 2.0 * n.mu * ru.term("u_pinv_2") * ru.term("e_ij"));
                note(
                    &mut counts,
                    "ut_k_pinv",
                    p,
                    le(p.norm(&ut_k_pinv), rhs, 1.0),
                );
            }
        }
    }

    let short: Vec<_> = counts
        .iter()
        .filter(|(_, (c, _))| *c < C6_INSTANCES)
        .map(|(k, _)| k.clone())
        .collect();
    let bad: Vec<_> = counts
        .iter()
        .filter(|(_, (_, f))| *f > 0)
        .map(|(k, v)| format!("{k}: {}", v.1))
        .collect();
    outcome(
        short.is_empty() && bad.is_empty(),
        format!(
            "{} checks, {tries} extra instances for the U_k^+ estimate; under-sampled {short:?}; violations {bad:?}",
            counts.values().map(|c| c.0).sum::<usize>()
        ),
    )
}

fn exp1_config(noise: NoiseKind) -> ExperimentConfig {
    ExperimentConfig {
        generator: Generator::SpsdLowRank { n: 100 },
        noise: NoiseConfig {
            kind: noise,
            sigma: 1e-3,
        },
        rank: 8,
        column_counts: (8..=60).step_by(4).collect(),
        trials: 20,
        sampler: Sampler::Uniform,
        norm: Schatten::NUCLEAR,
        seed: RngSeed(2024),
        variants: vec![
            "post_truncated".into(),
            "rank_u".into(),
            "projection_rank".into(),
        ],
        tau: None,
        symmetric: None,
        bounds: false,
    }
}

fn criterion_7() -> Outcome {
    let variants = ["post_truncated", "rank_u", "projection_rank"];
    let spsd = summarize(&run_experiment(&exp1_config(NoiseKind::Spsd)).unwrap());
    let sym = summarize(&run_experiment(&exp1_config(NoiseKind::Symmetric)).unwrap());
    let counts: Vec<usize> = (8..=60).step_by(4).collect();

    let mut a_fail = Vec::new();
    for &c in &counts {
        let base = mean_error(&spsd, SVD_BASELINE, c).unwrap();
        for v in variants {
            if mean_error(&spsd, v, c).unwrap() < base {
                a_fail.push(format!("{v}@{c}"));
            }
        }
    }
    let b_fail: Vec<_> = variants
        .iter()
        .filter(|v| mean_error(&spsd, v, 60).unwrap() > mean_error(&spsd, v, 8).unwrap())
        .collect();
    let post = mean_error(&sym, "post_truncated", 60).unwrap();
    let proj = mean_error(&sym, "projection_rank", 60).unwrap();
    let c_ok = post > proj;

    let row = |s: &[cur_core::experiments::SummaryRow], c: usize| {
        let mut out = format!("count {c:>2}:");
        for v in [SVD_BASELINE, "post_truncated", "rank_u", "projection_rank"] {
            out += &format!(" {v}={:.3e}", mean_error(s, v, c).unwrap());
        }
        out
    };
    outcome(
        a_fail.is_empty() && b_fail.is_empty() && c_ok,
        format!(
            "(a) violations {a_fail:?}; (b) violations {b_fail:?}; (c) symmetric noise at 60: (CU+C^T)_k {post:.3e} vs projection_rank {proj:.3e}\n    spsd      {}\n    spsd      {}\n    symmetric {}\n    symmetric {}",
            row(&spsd, 8),
            row(&spsd, 60),
            row(&sym, 8),
            row(&sym, 60)
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut holds = 0;
    for t in 0..C8_INSTANCES as u64 {
        let seed = RngSeed(800 + t);
        let mut rng = seed.rng();
        let n = rng.random_range(20..=60);
        let k = rng.random_range(1..=6);
        let a = gen_spsd_lowrank(n, k, seed).unwrap();
        let e = gen_noise(
            n,
            n,
            NoiseKind::Spsd,
            10f64.powf(rng.random_range(-4.0..-1.0)),
            seed.derive(&[1]),
        )
        .unwrap();
        let kt = &a + &e;
        let j = distinct(n, rng.random_range(k..=n.min(k + 20)), &mut rng);
        if becker_check(&kt, &j, k).unwrap().holds {
            holds += 1;
        }
    }
    let a = counterexample_matrix(0.5);
    let idx = IndexSet::new(vec![0, 1], 3).unwrap();
    let general = becker_general(&a, &idx, &idx, 1).unwrap();
    outcome(
        holds == C8_INSTANCES && !general.holds,
        format!(
            "{holds}/{C8_INSTANCES} Nyström instances hold; general analogue: {:.4} vs {:.4} (holds = {})",
            general.truncate_after, general.truncate_middle, general.holds
        ),
    )
}

fn criterion_9() -> Outcome {
    let cfg = |sampler| ExperimentConfig {
        generator: Generator::Hilbert { n: 200 },
        noise: NoiseConfig {
            kind: NoiseKind::None,
            sigma: 0.0,
        },
        rank: 10,
        column_counts: vec![15],
        trials: 20,
        sampler,
        norm: Schatten::SPECTRAL,
        seed: RngSeed(4),
        variants: vec![
            "post_truncated".into(),
            "rank_u".into(),
            "projection_rank".into(),
        ],
        tau: None,
        symmetric: Some(false),
        bounds: false,
    };
    let mv = summarize(&run_experiment(&cfg(Sampler::Maxvol)).unwrap());
    let un = summarize(&run_experiment(&cfg(Sampler::Uniform)).unwrap());
    let mut ok = true;
    let mut parts = Vec::new();
    for v in ["rank_u", "projection_rank", "post_truncated"] {
        let (a, b) = (
            mean_error(&mv, v, 15).unwrap(),
            mean_error(&un, v, 15).unwrap(),
        );
        let ratio = b / a;
        if v != "post_truncated" {
            ok &= ratio >= C9_MARGIN;
        }
        parts.push(format!(
            "{v}: maxvol {a:.3e}, uniform {b:.3e}, ratio {ratio:.1}"
        ));
    }
    let _ = gen_hilbert(1);
    outcome(ok, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let mut worst = 0.0f64;
    let mut points = 0;
    let grid = [(1, 10), (2, 10), (3, 17), (5, 40), (8, 100)];
    'outer: for (k, m) in grid {
        for s in (k..=m).step_by(((m - k) / 9).max(1)) {
            // (s - k + 1 + k (m - s)) / (s - k + 1), formed in integers.
            let num = (s - k + 1 + k * (m - s)) as f64;
            let numf = (k * (s - k + 1) + k * (m - s)) as f64;
            let den = (s - k + 1) as f64;
            let t = (num / den).sqrt();
            let tf = (numf / den).sqrt();
            worst = worst
                .max((t_factor(k, m, s).unwrap() - t).abs() / t)
                .max((t_factor_frobenius(k, m, s).unwrap() - tf).abs() / tf);
            points += 1;
            if points == 50 {
                break 'outer;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut subsets = 0;
    let mut bad = 0;
    for _ in 0..60 {
        let k = rng.random_range(1..=3);
        let m = rng.random_range(k..=10);
        let w = cur_core::linalg::orthonormalize(&gaussian(m, k, &mut rng));
        for s in k..=m {
            let (rows, _) = exhaustive_maxvol(&w, s).unwrap();
            let wi = w.select_rows(rows.as_slice());
            let norm = Schatten::SPECTRAL.norm(&pinv(&wi));
            subsets += 1;
            if !le(norm, t_factor(k, m, s).unwrap(), 1.0) {
                bad += 1;
            }
        }
    }
    outcome(
        points == 50 && worst <= C10_TOL && bad == 0,
        format!("{points} grid points, worst relative gap {worst:.1e}; {subsets} maxvol subsets, {bad} above t"),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 10] = [
        ("rank truncation counterexample", criterion_1, C1_BUDGET),
        ("exact CUR equivalences", criterion_2, C2_BUDGET),
        ("CUR identities", criterion_3, C3_BUDGET),
        ("perturbation bound sweep", criterion_4, C4_BUDGET),
        ("classical perturbation checks", criterion_5, C5_BUDGET),
        ("lemma properties", criterion_6, C6_BUDGET),
        ("SPSD error curves", criterion_7, C7_BUDGET),
        ("Nyström truncation inequality", criterion_8, C8_BUDGET),
        ("Hilbert sampler comparison", criterion_9, C9_BUDGET),
        ("t-factors", criterion_10, C10_BUDGET),
    ];
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.into_iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let took = start.elapsed();
        let pass = out.pass && took <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({:.2}s of {}s) {}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
