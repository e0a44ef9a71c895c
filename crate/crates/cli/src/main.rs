//! `cur`: CUR approximations, exactness checks, perturbation bounds and the
//! experiment runner from the command line.
//!
//! Exit codes: 0 success, 1 a checked inequality failed, 2 usage or config
//! error, 3 numerical precondition failure, 4 I/O error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cur_core::bounds::{BoundKind, BoundReport, NormSpec, PerturbedInstance};
use cur_core::cur::{approximate, extract_cur, verify_exact_cur, CurVariant, ExactCurReport};
use cur_core::experiments::{
    rank_truncation_counterexample, relative_error, run_experiment, summarize, write_outputs,
    ExperimentConfig,
};
use cur_core::io::{read_matrix, write_matrix, MatrixFormat};
use cur_core::linalg::{numerical_rank, truncated_svd, Schatten, RANK_TOL};
use cur_core::sampling::{
    length_sample, leverage_sample, maxvol_select, t_factor, uniform_sample, Axis, RngSeed,
};
use cur_core::{CurError, DenseMatrix, IndexSet};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "cur",
    version,
    about = "CUR approximation and perturbation bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a CUR approximation and write it to a file.
    Approx(ApproxArgs),
    /// Check the exactness conditions for given index sets.
    Verify(VerifyArgs),
    /// Evaluate the perturbation bounds for `input = A + noise`.
    Bounds(BoundsArgs),
    /// Run an experiment from a JSON or TOML config.
    Experiment(ExperimentArgs),
    /// The 3x3 rank-truncation counterexample.
    Counterexample(CounterexampleArgs),
    /// Greedy maximal-volume row and column selection with its t-factor check.
    Maxvol(MaxvolArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Uniform,
    Length,
    Leverage,
    Maxvol,
}

#[derive(Args)]
struct ApproxArgs {
    matrix: PathBuf,
    /// 1-based row indices, e.g. `1,4,7`.
    #[arg(long, requires = "cols", conflicts_with_all = ["sampler", "count"])]
    rows: Option<String>,
    /// 1-based column indices.
    #[arg(long, requires = "rows")]
    cols: Option<String>,
    #[arg(long, value_enum, requires = "count")]
    sampler: Option<SamplerArg>,
    /// Rows and columns to draw.
    #[arg(long, requires = "sampler")]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// plain, thresholded, rank_u, projection, projection_rank, post_truncated.
    #[arg(long, default_value = "plain")]
    variant: String,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    /// Output matrix; `.csv` selects CSV, anything else Matrix Market.
    #[arg(long)]
    out: PathBuf,
    /// Reference matrix for the `<out>.json` error sidecar.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    matrix: PathBuf,
    #[arg(long)]
    rows: String,
    #[arg(long)]
    cols: String,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct BoundsArgs {
    /// The observed matrix `A + E`.
    input: PathBuf,
    /// The noise `E`.
    noise: PathBuf,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    rows: String,
    #[arg(long)]
    cols: String,
    /// `spectral`, `frobenius`, `nuclear` or a number `p >= 1`.
    #[arg(long, default_value = "spectral")]
    norm: String,
    /// `all`, a bound name (projection, thresholded, plain, rank_u,
    /// projection_rank) or `maxvol`.
    #[arg(long, alias = "theorem", default_value = "all")]
    bound: String,
    /// Threshold for the thresholded bound; defaults to `||E||_2`.
    #[arg(long)]
    tau: Option<f64>,
    /// Write the full reports as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
}

#[derive(Args)]
struct MaxvolArgs {
    matrix: PathBuf,
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    count: usize,
}

enum Failure {
    Core(CurError),
    Usage(String),
    /// The command ran but an inequality it asserts does not hold.
    Check,
}

impl From<CurError> for Failure {
    fn from(e: CurError) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Approx(a) => cmd_approx(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Counterexample(a) => cmd_counterexample(a),
        Command::Maxvol(a) => cmd_maxvol(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CurError::Io(_) => 4,
                e if e.is_numerical() => 3,
                _ => 2,
            })
        }
    }
}

fn load(path: &Path) -> Result<DenseMatrix, Failure> {
    read_matrix(path).map(|(a, _)| a).map_err(|e| match e {
        CurError::Io(io) => CurError::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        ))
        .into(),
        e => Failure::Usage(format!("{}: {e}", path.display())),
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn select(a: &DenseMatrix, args: &ApproxArgs) -> Result<(IndexSet, IndexSet), Failure> {
    if let (Some(r), Some(c)) = (&args.rows, &args.cols) {
        return Ok((IndexSet::parse(r, a.rows())?, IndexSet::parse(c, a.cols())?));
    }
    let (Some(sampler), Some(count)) = (args.sampler, args.count) else {
        return Err(Failure::Usage(
            "give either --rows/--cols or --sampler/--count".into(),
        ));
    };
    let seed = RngSeed(args.seed);
    let (rs, cs) = (seed.derive(&[0]), seed.derive(&[1]));
    let need_k = || {
        args.rank
            .ok_or_else(|| Failure::Usage("this sampler needs --rank".into()))
    };
    Ok(match sampler {
        SamplerArg::Uniform => (
            uniform_sample(a.rows(), count, rs)?,
            uniform_sample(a.cols(), count, cs)?,
        ),
        SamplerArg::Length => (
            length_sample(a, count, Axis::Rows, rs)?,
            length_sample(a, count, Axis::Cols, cs)?,
        ),
        SamplerArg::Leverage => {
            let k = need_k()?;
            (
                leverage_sample(a, count, k, Axis::Rows, rs)?,
                leverage_sample(a, count, k, Axis::Cols, cs)?,
            )
        }
        SamplerArg::Maxvol => {
            let f = truncated_svd(a, need_k()?)?;
            (maxvol_select(&f.w, count)?, maxvol_select(&f.v, count)?)
        }
    })
}

#[derive(Serialize)]
struct Sidecar {
    variant: String,
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// `||truth - approximation|| / ||truth||` per norm.
    relative_error: NormErrors,
}

#[derive(Serialize)]
struct NormErrors {
    nuclear: f64,
    frobenius: f64,
    spectral: f64,
}

fn cmd_approx(args: ApproxArgs) -> Outcome {
    let a = load(&args.matrix)?;
    let variant = CurVariant::from_parts(&args.variant, args.rank, args.tau)?;
    let (rows, cols) = select(&a, &args)?;
    let f = extract_cur(&a, &rows, &cols)?;
    let approx = approximate(&f, Some(&a), variant)?;
    write_matrix(&args.out, &approx, MatrixFormat::from_path(&args.out))?;

    let residual = relative_error(&a, &approx, Schatten::SPECTRAL)?;
    println!("variant   {variant}");
    println!("rows      {}", rows);
    println!("cols      {}", cols);
    println!("residual  {residual:.6e}  (spectral, relative to the input)");

    if let Some(truth) = &args.truth {
        let t = load(truth)?;
        let err = |p| relative_error(&t, &approx, p);
        let sidecar = Sidecar {
            variant: variant.to_string(),
            rows: rows.one_based(),
            cols: cols.one_based(),
            relative_error: NormErrors {
                nuclear: err(Schatten::NUCLEAR)?,
                frobenius: err(Schatten::FROBENIUS)?,
                spectral: err(Schatten::SPECTRAL)?,
            },
        };
        let path = sidecar_path(&args.out);
        let text = serde_json::to_string_pretty(&sidecar).expect("plain data serializes");
        std::fs::write(&path, text + "\n").map_err(CurError::from)?;
        println!(
            "error     {:.6e}  (spectral, relative to --truth)",
            sidecar.relative_error.spectral
        );
        println!("sidecar   {}", path.display());
    }
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn cmd_verify(args: VerifyArgs) -> Outcome {
    let a = load(&args.matrix)?;
    let rows = IndexSet::parse(&args.rows, a.rows())?;
    let cols = IndexSet::parse(&args.cols, a.cols())?;
    let r = verify_exact_cur(&a, &rows, &cols, args.tol)?;
    println!(
        "rank(A) {}  rank(U) {}  rank(C) {}  rank(R) {}",
        r.rank_a, r.rank_u, r.rank_c, r.rank_r
    );
    print!("{}", render_conditions(&r));
    println!("consistent {}", verdict(r.consistent()));
    if r.consistent() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn render_conditions(r: &ExactCurReport) -> String {
    let rows: [(&str, bool, Option<f64>); 5] = [
        ("rank(U) = rank(A)", r.rank_u_equals_rank_a, None),
        ("A = C U^+ R", r.cur_exact, Some(r.cur_residual)),
        (
            "A = C C^+ A R^+ R",
            r.projection_exact,
            Some(r.projection_residual),
        ),
        ("A^+ = R^+ U C^+", r.pinv_exact, Some(r.pinv_residual)),
        ("rank(C) = rank(R) = rank(A)", r.ranks_c_r_equal_a, None),
    ];
    let mut s = String::new();
    for (name, ok, residual) in rows {
        let res = residual.map_or(String::new(), |x| format!("  residual {x:.6e}"));
        let _ = writeln!(
            s,
            "{name:<28} {:<5}{res}",
            if ok { "TRUE" } else { "FALSE" }
        );
    }
    s
}

fn parse_bound(name: &str) -> Result<Option<BoundKind>, Failure> {
    Ok(Some(match name {
        "all" | "maxvol" => return Ok(None),
        "projection" => BoundKind::Projection,
        "thresholded" => BoundKind::Thresholded,
        "plain" => BoundKind::Plain,
        "rank_u" => BoundKind::RankU,
        "projection_rank" => BoundKind::ProjectionRank,
        other => return Err(Failure::Usage(format!("unknown bound '{other}'"))),
    }))
}

fn report_lines(r: &BoundReport, name: &str) -> String {
    let fmt = |x: Option<f64>| x.map_or("undefined".to_string(), |x| format!("{x:.6e}"));
    let status = |holds: Option<bool>, pre: bool| match holds {
        _ if !pre => "precondition fails",
        Some(true) => "holds",
        Some(false) => "VIOLATED",
        None => "undefined",
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{name:<34} lhs {:.6e}  rhs {:>12}  {}",
        r.lhs_measured,
        fmt(r.rhs),
        status(r.holds(), r.precondition_ok)
    );
    for (alt, a) in &r.alternates {
        let _ = writeln!(
            s,
            "  {:<32} lhs {:.6e}  rhs {:>12}  {}",
            alt,
            r.lhs_measured,
            fmt(a.rhs),
            status(
                r.alternate_holds(alt),
                r.precondition_ok && a.precondition_ok
            )
        );
    }
    s
}

/// Maxvol certification enumerates every subset; beyond this it is skipped.
const MAX_ENUMERATED_SUBSETS: u64 = 2_000_000;

/// `n choose r`, saturating at `u64::MAX`.
fn binomial(n: usize, r: usize) -> u64 {
    let r = r.min(n - r) as u64;
    let mut acc: u64 = 1;
    for i in 0..r {
        acc = match acc.checked_mul(n as u64 - i) {
            Some(x) => x / (i + 1),
            None => return u64::MAX,
        };
    }
    acc
}

fn cmd_bounds(args: BoundsArgs) -> Outcome {
    let input = load(&args.input)?;
    let noise = load(&args.noise)?;
    if input.shape() != noise.shape() {
        return Err(Failure::Usage(format!(
            "input is {:?} but noise is {:?}",
            input.shape(),
            noise.shape()
        )));
    }
    let p: Schatten = args.norm.parse()?;
    let n = NormSpec::new(p);
    let selected = parse_bound(&args.bound)?;
    let a = &input - &noise;
    let rank = numerical_rank(&a, RANK_TOL);
    if args.rank == 0 || args.rank > rank {
        return Err(Failure::Usage(format!(
            "--rank {} exceeds the numerical rank {rank} of input - noise",
            args.rank
        )));
    }
    let rows = IndexSet::parse(&args.rows, a.rows())?;
    let cols = IndexSet::parse(&args.cols, a.cols())?;
    let inst = PerturbedInstance::new(&a, &noise, args.rank, &rows, &cols)?;
    let tau = args.tau.unwrap_or_else(|| Schatten::SPECTRAL.norm(&noise));

    print!("{}", inst.render_summary_table(n, tau)?);
    println!();
    let mut reports = Vec::new();
    if args.bound == "all" {
        reports = inst.evaluate_all(n, &[tau])?;
    } else if let Some(kind) = selected {
        reports.push(inst.bound(kind, tau, n)?);
    }
    for r in &reports {
        print!("{}", report_lines(r, r.kind.label()));
    }
    let mut json = serde_json::json!({ "reports": reports });
    let subsets = binomial(a.rows(), rows.len()).saturating_add(binomial(a.cols(), cols.len()));
    if args.bound == "maxvol" && subsets > MAX_ENUMERATED_SUBSETS {
        return Err(Failure::Usage(format!(
            "maxvol certification would enumerate {subsets} subsets (limit {MAX_ENUMERATED_SUBSETS})"
        )));
    }
    if args.bound == "all" && subsets > MAX_ENUMERATED_SUBSETS {
        println!("maxvol bounds skipped: certification would enumerate {subsets} subsets");
    } else if args.bound == "all" || args.bound == "maxvol" {
        let mv = inst.bound_maxvol(n)?;
        println!(
            "maxvol certified {}  t_rows {:.6}  t_cols {:.6}",
            mv.certified, mv.t_rows, mv.t_cols
        );
        print!(
            "{}",
            report_lines(&mv.projection_rank, "maxvol_projection_rank")
        );
        print!("{}", report_lines(&mv.rank_u, "maxvol_rank_u"));
        json["maxvol"] = serde_json::to_value(&mv).expect("plain data serializes");
    }
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&json).expect("plain data serializes");
        std::fs::write(path, text + "\n").map_err(CurError::from)?;
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Outcome {
    let config = ExperimentConfig::load(&args.config).map_err(|e| match e {
        CurError::Io(_) => Failure::Core(e),
        e => Failure::Usage(format!("{}: {e}", args.config.display())),
    })?;
    let results = run_experiment(&config)?;
    std::fs::create_dir_all(&args.out_dir).map_err(CurError::from)?;
    write_outputs(&args.out_dir, &config, &results)?;
    println!(
        "{:<16} {:>6} {:>6} {:>13} {:>13} {:>13}",
        "variant", "count", "trials", "mean", "min", "max"
    );
    for row in summarize(&results) {
        println!(
            "{:<16} {:>6} {:>6} {:>13.6e} {:>13.6e} {:>13.6e}",
            row.variant, row.column_count, row.trials, row.mean, row.min, row.max
        );
    }
    let violated = results
        .iter()
        .filter(|r| r.precondition_ok == Some(true))
        .filter(|r| matches!(r.bound_rhs, Some(rhs) if r.relative_error > rhs))
        .count();
    if config.bounds {
        println!("bound violations {violated}");
    }
    if violated == 0 {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_counterexample(args: CounterexampleArgs) -> Outcome {
    let r = rank_truncation_counterexample(args.epsilon)?;
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    println!("epsilon {}", r.epsilon);
    println!(
        "spectrum of A - (C U^+ R)_1   ({})",
        fmt(&r.post_truncated_spectrum)
    );
    println!(
        "spectrum of A - C U_1^+ R     ({})",
        fmt(&r.rank_u_spectrum)
    );
    for n in &r.norms {
        println!(
            "S_{:<4} (C U^+ R)_1 {:>12.6}   C U_1^+ R {:>12.6}   {}",
            n.p.to_string(),
            n.post_truncated,
            n.rank_u,
            verdict(n.rank_u_smaller)
        );
    }
    println!("{}", verdict(r.pass));
    if r.pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_maxvol(args: MaxvolArgs) -> Outcome {
    let a = load(&args.matrix)?;
    let k = args.rank;
    if k == 0 || k > a.rows().min(a.cols()) {
        return Err(Failure::Usage(format!("--rank {k} out of range")));
    }
    if args.count < k || args.count > a.rows().min(a.cols()) {
        return Err(Failure::Usage(format!(
            "--count must lie in {k}..={}",
            a.rows().min(a.cols())
        )));
    }
    let f = truncated_svd(&a, k)?;
    let mut ok = true;
    for (axis, basis) in [("rows", &f.w), ("cols", &f.v)] {
        let sel = maxvol_select(basis, args.count)?;
        let sub = basis.select_rows(sel.as_slice());
        let norm = 1.0 / cur_core::linalg::singular_values(&sub)[k - 1];
        let t = t_factor(k, basis.rows(), args.count)?;
        let holds = norm <= t * (1.0 + 1e-12);
        ok &= holds;
        println!("{axis} {sel}");
        println!(
            "  ||pinv of selected singular-vector rows||_2 {norm:.6}  <=  t {t:.6}  {}",
            verdict(holds)
        );
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}
