//! Command-line front end for the two-asset Kou PIDE pricing engine.
//!
//! Subcommands: `price`, `converge`, `greeks`, `stability`, `mc`,
//! `bench-integral`. Configuration comes from an optional `key = value`
//! file plus command-line flags; flags win. Exit codes: 0 success,
//! 1 validation error, 2 solver failure.

use clap::{Args, Parser, Subcommand};
use kou2d::analysis::{
    self, convergence_slope, greeks, interpolate_price, temporal_error_study, ReferenceCache,
    StudyTarget,
};
use kou2d::jumpint;
use kou2d::mc::{mc_price, McConfig};
use kou2d::model::{KouParams, ParameterSet, SetLabel};
use kou2d::pide::{Pide2d, PriceError};
use kou2d::stability::{verify_bounds, BoundCase, VerifySpec};
use kou2d::steppers::{run, Scheme, SchemeSpec, StepError};
use std::io::Write;
use std::path::PathBuf;

mod config;
use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "kou2d",
    about = "European two-asset option pricing under the Kou jump-diffusion model",
    version
)]
struct Cli {
    /// Configuration file with `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print solver statistics to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Price the option at one or more spots.
    Price(PriceArgs),
    /// Temporal convergence study against the semidiscrete reference.
    Converge(ConvergeArgs),
    /// Delta/Gamma surfaces, optionally their temporal-error study.
    Greeks(GreeksArgs),
    /// Verify the stability bounds by random sampling.
    Stability(StabilityArgs),
    /// Monte Carlo cross-check price.
    Mc(McArgs),
    /// Wall time of the jump-integral evaluation versus grid size.
    BenchIntegral(BenchArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Parameter set label: set1, set2 or set3.
    #[arg(long)]
    set: Option<String>,
    /// Splitting scheme: cnfe, cnfi, ietr, cnab, mcs, mcs2, sc2a.
    #[arg(long)]
    scheme: Option<String>,
    /// Cells per direction (sets both m1 and m2).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    /// Base step count N; the fair-comparison rule fixes N'.
    #[arg(long)]
    n: Option<usize>,
    /// Splitting parameter of the ADI schemes.
    #[arg(long)]
    theta: Option<f64>,
    /// Fixed-point sweeps of CNFI.
    #[arg(long)]
    fp_iters: Option<usize>,
    /// Iterative-solver relative-residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Iterative-solver iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct PriceArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Spot pair `s1,s2`; repeatable.
    #[arg(long)]
    spot: Vec<String>,
    /// Write the full value surface as CSV (s1,s2,value).
    #[arg(long)]
    surface: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Comma-separated base step counts, e.g. `20,40,80,160`.
    #[arg(long)]
    n_list: Option<String>,
    /// Comma-separated schemes or `all`.
    #[arg(long)]
    schemes: Option<String>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GreeksArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the per-Greek temporal-error study instead of a surface dump.
    #[arg(long)]
    study: bool,
    /// Base step counts for the study.
    #[arg(long)]
    n_list: Option<String>,
}

#[derive(Args)]
struct StabilityArgs {
    /// Samples per bound case.
    #[arg(long)]
    samples: Option<usize>,
    /// Largest power checked.
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Relative mixed-term size in the root condition.
    #[arg(long)]
    gamma: Option<f64>,
    /// Magnitude scale of the jump eigenvalue times the step size.
    #[arg(long)]
    w0_scale: Option<f64>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    set: Option<String>,
    /// Spot pair `s1,s2`; repeatable.
    #[arg(long)]
    spot: Vec<String>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    antithetic: bool,
    /// Also write a CSV report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    set: Option<String>,
    /// Comma-separated grid sizes, e.g. `100,200,400`.
    #[arg(long)]
    m_list: Option<String>,
    /// Timing repetitions per size (best time is reported).
    #[arg(long)]
    reps: Option<usize>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Solver(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Solver(m) => f.write_str(m),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

impl From<PriceError> for CliError {
    fn from(e: PriceError) -> Self {
        match e {
            PriceError::Build(b) => CliError::Usage(b.to_string()),
            PriceError::Step(s) => CliError::Solver(s.to_string()),
        }
    }
}

impl From<StepError> for CliError {
    fn from(e: StepError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<analysis::AnalysisError> for CliError {
    fn from(e: analysis::AnalysisError) -> Self {
        match e {
            analysis::AnalysisError::Price(p) => p.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(CliError::Usage)?,
        None => FileConfig::empty(),
    };
    if let Some(threads) = cli.threads.or(cfg.get("threads")?) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match cli.cmd {
        Cmd::Price(a) => cmd_price(a, &cfg, cli.verbose),
        Cmd::Converge(a) => cmd_converge(a, &cfg),
        Cmd::Greeks(a) => cmd_greeks(a, &cfg),
        Cmd::Stability(a) => cmd_stability(a, &cfg),
        Cmd::Mc(a) => cmd_mc(a, &cfg),
        Cmd::BenchIntegral(a) => cmd_bench_integral(a, &cfg),
    }
}

/// Full-precision CSV float: 17 significant digits, round-trippable.
fn csv_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_spot(s: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("spot must be `s1,s2`, got `{s}`")));
    }
    match (
        parts[0].trim().parse::<f64>(),
        parts[1].trim().parse::<f64>(),
    ) {
        (Ok(a), Ok(b)) => Ok((a, b)),
        _ => Err(CliError::Usage(format!("spot must be numeric, got `{s}`"))),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| CliError::Usage(format!("invalid {what} entry `{p}`")))
        })
        .collect()
}

/// Parameter resolution: a set label (flag or config) plus optional
/// field-by-field overrides from the config file.
fn resolve_params(set_flag: &Option<String>, cfg: &FileConfig) -> Result<KouParams<f64>, CliError> {
    let label_str = set_flag.clone().or(cfg.get_str("set")).ok_or_else(|| {
        CliError::Usage("no parameter set: pass --set or put `set = ...` in the config".into())
    })?;
    let label = SetLabel::parse(&label_str)
        .ok_or_else(|| CliError::Usage(format!("unknown parameter set `{label_str}`")))?;
    let mut p = ParameterSet::by_label(label).params;
    let overrides: [(&str, &mut f64); 14] = [
        ("sigma1", &mut p.sigma1),
        ("sigma2", &mut p.sigma2),
        ("r", &mut p.r),
        ("rho", &mut p.rho),
        ("lambda", &mut p.lambda),
        ("p1", &mut p.p1),
        ("p2", &mut p.p2),
        ("eta-p1", &mut p.eta_p1),
        ("eta-q1", &mut p.eta_q1),
        ("eta-p2", &mut p.eta_p2),
        ("eta-q2", &mut p.eta_q2),
        ("strike", &mut p.strike),
        ("maturity", &mut p.maturity),
        ("s-max", &mut p.s_max),
    ];
    for (key, field) in overrides {
        if let Some(v) = cfg.get::<f64>(key)? {
            *field = v;
        }
    }
    p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(p)
}

struct ResolvedProblem {
    params: KouParams<f64>,
    scheme: Scheme,
    m1: usize,
    m2: usize,
    n: Option<usize>,
    theta: Option<f64>,
    fp_iters: Option<usize>,
    tol: f64,
    max_iter: usize,
}

impl ResolvedProblem {
    /// Base step count; required by the commands that run a single scheme.
    fn require_n(&self) -> Result<usize, CliError> {
        self.n
            .ok_or_else(|| CliError::Usage("step count required: pass --n".into()))
    }

    fn spec(&self, n: usize) -> SchemeSpec {
        let mut spec = SchemeSpec::new(self.scheme, n);
        if let Some(theta) = self.theta {
            spec = spec.theta(theta);
        }
        if let Some(l) = self.fp_iters {
            spec = spec.fp_iters(l);
        }
        spec
    }
}

fn resolve_problem(a: &ProblemArgs, cfg: &FileConfig) -> Result<ResolvedProblem, CliError> {
    let params = resolve_params(&a.set, cfg)?;
    let scheme_str = a
        .scheme
        .clone()
        .or(cfg.get_str("scheme"))
        .unwrap_or_else(|| "mcs2".to_string());
    let scheme = Scheme::parse(&scheme_str)
        .ok_or_else(|| CliError::Usage(format!("unknown scheme `{scheme_str}`")))?;
    let m = a.m.or(cfg.get("m")?);
    let m1 =
        a.m1.or(cfg.get("m1")?)
            .or(m)
            .ok_or_else(|| CliError::Usage("grid size required: pass --m (or --m1/--m2)".into()))?;
    let m2 = a.m2.or(cfg.get("m2")?).or(m).unwrap_or(m1);
    let n = a.n.or(cfg.get("n")?);
    if m1 < 2 || m2 < 2 || n.is_some_and(|n| n < 1) {
        return Err(CliError::Usage(format!(
            "grid/step counts out of range: m1={m1}, m2={m2}, n={n:?}"
        )));
    }
    let tol = a
        .tol
        .or(cfg.get("tol")?)
        .unwrap_or(kou2d::pide::DEFAULT_CN_TOL);
    let max_iter = a
        .max_iter
        .or(cfg.get("max-iter")?)
        .unwrap_or(kou2d::pide::DEFAULT_CN_MAX_ITER);
    Ok(ResolvedProblem {
        params,
        scheme,
        m1,
        m2,
        n,
        theta: a.theta.or(cfg.get("theta")?),
        fp_iters: a.fp_iters.or(cfg.get("fp-iters")?),
        tol,
        max_iter,
    })
}

fn write_output(path: &Option<PathBuf>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, contents)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{contents}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn cmd_price(a: PriceArgs, cfg: &FileConfig, verbose: bool) -> Result<(), CliError> {
    let rp = resolve_problem(&a.problem, cfg)?;
    let spec = rp.spec(rp.require_n()?);
    let spots: Vec<(f64, f64)> = {
        let mut v = Vec::new();
        for s in &a.spot {
            v.push(parse_spot(s)?);
        }
        if v.is_empty() {
            if let Some(s) = cfg.get_str("spot") {
                v.push(parse_spot(&s)?);
            }
        }
        if v.is_empty() {
            v.push((rp.params.strike, rp.params.strike));
        }
        v
    };
    let mut problem =
        Pide2d::new(rp.params, rp.m1, rp.m2).map_err(|e| CliError::Usage(e.to_string()))?;
    problem.cn_tol = rp.tol;
    problem.cn_max_iter = rp.max_iter;
    let v0 = problem.initial_condition();
    let values = run(&spec, &mut problem, v0.as_slice(), rp.params.maturity)?;
    let surface = kou2d::grid::GridFunction::from_values(&problem.grid, values)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    for (s1, s2) in &spots {
        let price = interpolate_price(&surface, &problem.grid, *s1, *s2)?;
        println!("price({s1}, {s2}) = {price:.4}");
    }
    if verbose {
        eprintln!(
            "scheme {} N'={} | cn solves {} iterations {} last-residual {:.2e}",
            rp.scheme,
            spec.n_prime(),
            problem.log.cn_solves,
            problem.log.cn_iterations,
            problem.log.last.residual
        );
    }
    if let Some(path) = &a.surface {
        let mut csv = String::from("s1,s2,value\n");
        for j in 0..=problem.grid.m2() {
            for i in 0..=problem.grid.m1() {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    csv_f(problem.grid.g1.point(i)),
                    csv_f(problem.grid.g2.point(j)),
                    csv_f(surface.get(i, j))
                ));
            }
        }
        write_output(&Some(path.clone()), &csv)?;
    }
    Ok(())
}

fn cmd_converge(a: ConvergeArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let rp = resolve_problem(&a.problem, cfg)?;
    let n_list: Vec<usize> = match a.n_list.clone().or(cfg.get_str("n-list")) {
        Some(s) => parse_list(&s, "step count")?,
        None => vec![rp.require_n()?],
    };
    let schemes: Vec<Scheme> = match a.schemes.clone().or(cfg.get_str("schemes")) {
        Some(s) if s.trim().eq_ignore_ascii_case("all") => Scheme::ALL.to_vec(),
        Some(s) => {
            let names: Vec<String> = parse_list(&s, "scheme")?;
            let mut v = Vec::new();
            for name in names {
                v.push(
                    Scheme::parse(&name)
                        .ok_or_else(|| CliError::Usage(format!("unknown scheme `{name}`")))?,
                );
            }
            v
        }
        None => vec![rp.scheme],
    };
    let cache = ReferenceCache::from_env();
    let mut csv = String::from("scheme,m,n,n_prime,error,seconds\n");
    for scheme in schemes {
        let records = temporal_error_study(
            &rp.params,
            scheme,
            rp.m1,
            &n_list,
            StudyTarget::Value,
            Some(&cache),
        )?;
        for r in &records {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.scheme,
                r.m,
                r.n,
                r.n_prime,
                csv_f(r.error),
                csv_f(r.seconds)
            ));
        }
        if records.len() >= 2 {
            eprintln!(
                "{scheme}: observed temporal order {:.2}",
                convergence_slope(&records)
            );
        }
    }
    write_output(&a.out, &csv)
}

fn cmd_greeks(a: GreeksArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let rp = resolve_problem(&a.problem, cfg)?;
    if a.study {
        let n_list: Vec<usize> = match a.n_list.clone().or(cfg.get_str("n-list")) {
            Some(s) => parse_list(&s, "step count")?,
            None => vec![20, 40, 80, 160],
        };
        let cache = ReferenceCache::from_env();
        let mut csv = String::from("target,scheme,m,n,n_prime,error,seconds\n");
        let studies =
            analysis::greek_error_study(&rp.params, rp.scheme, rp.m1, &n_list, Some(&cache))?;
        for (name, records) in studies {
            for r in &records {
                csv.push_str(&format!(
                    "{name},{},{},{},{},{},{}\n",
                    r.scheme,
                    r.m,
                    r.n,
                    r.n_prime,
                    csv_f(r.error),
                    csv_f(r.seconds)
                ));
            }
        }
        return write_output(&a.out, &csv);
    }
    let spec = rp.spec(rp.require_n()?);
    let mut problem =
        Pide2d::new(rp.params, rp.m1, rp.m2).map_err(|e| CliError::Usage(e.to_string()))?;
    problem.cn_tol = rp.tol;
    problem.cn_max_iter = rp.max_iter;
    let v0 = problem.initial_condition();
    let values = run(&spec, &mut problem, v0.as_slice(), rp.params.maturity)?;
    let surface = kou2d::grid::GridFunction::from_values(&problem.grid, values)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let g = greeks(&surface, &problem.grid);
    let mut csv = String::from("s1,s2,value,delta1,delta2,gamma11,gamma22,gamma12\n");
    for j in 0..=problem.grid.m2() {
        for i in 0..=problem.grid.m1() {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                csv_f(problem.grid.g1.point(i)),
                csv_f(problem.grid.g2.point(j)),
                csv_f(surface.get(i, j)),
                csv_f(g.delta1.get(i, j)),
                csv_f(g.delta2.get(i, j)),
                csv_f(g.gamma11.get(i, j)),
                csv_f(g.gamma22.get(i, j)),
                csv_f(g.gamma12.get(i, j))
            ));
        }
    }
    write_output(&a.out, &csv)
}

fn cmd_stability(a: StabilityArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let mut base = VerifySpec::new(BoundCase::ImexCnfe);
    base.samples = a.samples.or(cfg.get("samples")?).unwrap_or(10_000);
    base.n_max = a.n_max.or(cfg.get("n-max")?).unwrap_or(100);
    base.seed = a.seed.or(cfg.get("seed")?).unwrap_or(2024);
    base.gamma = a.gamma.or(cfg.get("gamma")?).unwrap_or(1.0);
    base.w0_scale = a.w0_scale.or(cfg.get("w0-scale")?).unwrap_or(0.1);
    let cases = [
        BoundCase::ImexCnfe,
        BoundCase::ImexCnfi { l: 2 },
        BoundCase::ImexIetr,
        BoundCase::ImexCnab,
        BoundCase::Mcs {
            theta: 1.0 / 3.0,
            complex_z: false,
        },
        BoundCase::Mcs {
            theta: 0.5,
            complex_z: true,
        },
        BoundCase::Mcs2 {
            theta: 1.0 / 3.0,
            complex_z: false,
        },
        BoundCase::Mcs2 {
            theta: 0.5,
            complex_z: true,
        },
    ];
    let mut csv = String::from("case,scheme,samples,n_max,max_ratio,violations,pass\n");
    let mut all_pass = true;
    for case in cases {
        let mut spec = base;
        spec.case = case;
        let report = verify_bounds(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
        all_pass &= report.passed();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            case.label(),
            case.scheme(),
            report.samples,
            report.n_max,
            csv_f(report.max_ratio),
            report.violations,
            if report.passed() { "pass" } else { "fail" }
        ));
    }
    write_output(&a.out, &csv)?;
    if !all_pass {
        return Err(CliError::Solver("stability bound violated".into()));
    }
    Ok(())
}

fn cmd_mc(a: McArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let params = resolve_params(&a.set, cfg)?;
    let spots: Vec<(f64, f64)> = {
        let mut v = Vec::new();
        for s in &a.spot {
            v.push(parse_spot(s)?);
        }
        if v.is_empty() {
            v.push((params.strike, params.strike));
        }
        v
    };
    let mc_cfg = McConfig {
        paths: a.paths.or(cfg.get("paths")?).unwrap_or(1_000_000),
        seed: a.seed.or(cfg.get("seed")?).unwrap_or(1),
        antithetic: a.antithetic || cfg.get("antithetic")?.unwrap_or(false),
    };
    let mut csv = String::from("s1,s2,paths,seed,antithetic,price,std_error\n");
    for (s1, s2) in &spots {
        let est =
            mc_price(&params, *s1, *s2, &mc_cfg).map_err(|e| CliError::Usage(e.to_string()))?;
        println!(
            "mc price({s1}, {s2}) = {:.4} (stderr {:.4}, paths {}, seed {})",
            est.price, est.std_error, mc_cfg.paths, mc_cfg.seed
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_f(*s1),
            csv_f(*s2),
            mc_cfg.paths,
            mc_cfg.seed,
            mc_cfg.antithetic,
            csv_f(est.price),
            csv_f(est.std_error)
        ));
    }
    if a.out.is_some() {
        write_output(&a.out, &csv)?;
    }
    Ok(())
}

fn cmd_bench_integral(a: BenchArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let params = resolve_params(&a.set, cfg)?;
    let m_list: Vec<usize> = match a.m_list.clone().or(cfg.get_str("m-list")) {
        Some(s) => parse_list(&s, "grid size")?,
        None => vec![100, 200, 300, 400, 500, 600, 700, 800, 900, 1000],
    };
    let reps = a.reps.or(cfg.get("reps")?).unwrap_or(3);
    let mut csv = String::from("m,seconds\n");
    for &m in &m_list {
        if m < 2 {
            return Err(CliError::Usage(format!("grid size {m} too small")));
        }
        let secs =
            jumpint::bench_apply(&params, m, reps).map_err(|e| CliError::Usage(e.to_string()))?;
        csv.push_str(&format!("{m},{}\n", csv_f(secs)));
    }
    write_output(&a.out, &csv)
}
