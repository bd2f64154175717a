use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use spikesolve::certificate::{
    build_matrices, dual_certificate, norm_bound_report, verify_interpolation, DUAL_SCAN_GRID,
};
use spikesolve::error_analysis::{error_report, ErrorReport};
use spikesolve::instances::{random_measure, AmplitudeLaw};
use spikesolve::kernels::{kernel_family, KernelFamily, DEFAULT_BUMP_L};
use spikesolve::noise::{make_observation_trial, NoiseKind, NoiseSpec};
use spikesolve::solvers::{
    dual_sup, solve_constrained, solve_noiseless, solve_tikhonov, Observation, SolveResult,
    SolverConfig,
};
use spikesolve::suites::{parse_suites, run_suite, SuiteOptions};
use spikesolve::{DiscreteMeasure, TrigPoly};

#[derive(Parser)]
#[command(name = "spikesolve", version, about = "Sparse spike recovery on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random separated measure as JSON.
    Generate(GenerateArgs),
    /// Noisy low-frequency observation of a measure.
    Observe(ObserveArgs),
    /// Recover a measure from an observation.
    Solve(SolveArgs),
    /// Dual certificate for the support and phases of a measure.
    Certify(CertifyArgs),
    /// Error functionals of a recovery against the truth.
    Analyze(AnalyzeArgs),
    /// Run verification suites and write one CSV per suite.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long = "J")]
    j: usize,
    #[arg(long = "M")]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    margin: f64,
    #[arg(long, default_value = "unit-phase")]
    law: AmplitudeLaw,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Gaussian,
    Bounded,
    None,
}

#[derive(Args)]
struct ObserveArgs {
    /// Measure JSON file.
    #[arg(long)]
    measure: PathBuf,
    #[arg(long = "M")]
    m: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    noise: NoiseArg,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Noise radius for bounded noise; defaults to sigma(1+gamma)sqrt(2(2M+1)).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    trial: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct ObservationFile {
    #[serde(rename = "M")]
    m: usize,
    y: TrigPoly,
    epsilon: f64,
    noise: Option<NoiseSpec>,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    grid_factor: Option<usize>,
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Restrict atoms to the candidate grid.
    #[arg(long)]
    no_refine: bool,
    /// Solver configuration JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SolverFlags {
    fn build(&self) -> anyhow::Result<SolverConfig> {
        let mut cfg = match &self.config {
            Some(p) => serde_json::from_str(&read(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
            None => SolverConfig::default(),
        };
        if let Some(g) = self.grid_factor {
            cfg.grid_factor = g;
        }
        if let Some(t) = self.gap_tol {
            cfg.gap_tolerance = t;
        }
        if let Some(n) = self.max_iterations {
            cfg.max_iterations = n;
        }
        if self.no_refine {
            cfg.refine_positions = false;
        }
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Observation JSON file.
    #[arg(long)]
    obs: PathBuf,
    /// Penalized problem with this weight.
    #[arg(long, conflicts_with = "delta")]
    tau: Option<f64>,
    /// Constrained problem with this residual bound (default: the observation's epsilon).
    #[arg(long)]
    delta: Option<f64>,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Measure JSON file; its support and amplitude phases are interpolated.
    #[arg(long)]
    measure: PathBuf,
    #[arg(long = "M")]
    m: usize,
    #[arg(long, default_value_t = DUAL_SCAN_GRID)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Fejer,
    Bump,
    Dirichlet,
    G,
}

impl From<KernelArg> for KernelFamily {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Fejer => KernelFamily::Fejer,
            KernelArg::Bump => KernelFamily::Bump,
            KernelArg::Dirichlet => KernelFamily::Dirichlet,
            KernelArg::G => KernelFamily::G,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Recovered measure, or a solve result JSON.
    #[arg(long)]
    recovered: PathBuf,
    /// Ground-truth measure JSON.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "fejer")]
    kernel: KernelArg,
    /// Kernel scales N, comma separated.
    #[arg(long = "N", value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Suite name, comma-separated list, or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = SuiteOptions::default().seed)]
    seed: u64,
    /// Overrides each suite's default instance count.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

/// Distinguishes input problems (exit 2) from numerical ones (exit 3).
#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Failure::Usage(msg.into()).into()
}

fn numerical(msg: impl Into<String>) -> anyhow::Error {
    Failure::Numerical(msg.into()).into()
}

fn lib(e: spikesolve::Error) -> anyhow::Error {
    match e {
        spikesolve::Error::Parameter(_) | spikesolve::Error::Json(_) => usage(e.to_string()),
        _ => numerical(e.to_string()),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).context("stdout")?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn read_measure(path: &Path) -> anyhow::Result<DiscreteMeasure> {
    let text = read(path)?;
    if let Ok(r) = serde_json::from_str::<SolveResult>(&text) {
        return Ok(r.measure);
    }
    DiscreteMeasure::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn generate(a: &GenerateArgs) -> anyhow::Result<()> {
    let mu = random_measure(a.j, a.m, a.margin, a.seed, a.law).map_err(lib)?;
    emit(a.out.as_deref(), &(mu.to_json().map_err(lib)? + "\n"))
}

fn observe(a: &ObserveArgs) -> anyhow::Result<()> {
    let mu0 = read_measure(&a.measure)?;
    let spec = match a.noise {
        NoiseArg::Gaussian => NoiseSpec::gaussian(a.sigma, a.gamma, a.seed),
        NoiseArg::Bounded => NoiseSpec {
            kind: NoiseKind::BoundedAdversarial,
            sigma: a.sigma,
            gamma: a.gamma,
            seed: a.seed,
            epsilon: a.epsilon,
        },
        NoiseArg::None => NoiseSpec::gaussian(0.0, a.gamma, a.seed),
    };
    let (obs, _, eps) = make_observation_trial(&mu0, a.m, &spec, a.trial).map_err(lib)?;
    let file = ObservationFile { m: a.m, y: obs.y, epsilon: eps, noise: Some(spec) };
    emit(a.out.as_deref(), &to_json(&file)?)
}

fn solve(a: &SolveArgs) -> anyhow::Result<()> {
    let text = read(&a.obs)?;
    let file: ObservationFile =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", a.obs.display())))?;
    if file.y.degree() != file.m {
        return Err(usage(format!("observation degree {} does not match M = {}", file.y.degree(), file.m)));
    }
    let cfg = a.solver.build()?;
    let obs = Observation::new(file.y);
    let result = match (a.tau, a.delta) {
        (Some(tau), _) => solve_tikhonov(&obs, tau, &cfg),
        (None, Some(delta)) => solve_constrained(&obs, delta, &cfg),
        (None, None) if file.epsilon > 0.0 => solve_constrained(&obs, file.epsilon, &cfg),
        (None, None) => solve_noiseless(&obs, &cfg),
    }
    .map_err(lib)?;
    emit(a.out.as_deref(), &(result.to_json().map_err(lib)? + "\n"))?;
    if !result.converged {
        return Err(numerical(format!("solver did not converge (duality gap {:e})", result.duality_gap)));
    }
    Ok(())
}

#[derive(Serialize)]
struct CertifyReport {
    #[serde(rename = "M")]
    m: usize,
    support: Vec<f64>,
    alpha: Vec<Complex64>,
    beta: Vec<Complex64>,
    interpolation: spikesolve::certificate::InterpolationReport,
    norms: spikesolve::certificate::NormBoundReport,
    sup_norm: f64,
    sup_off_support: f64,
    sup_far: f64,
    strictly_below_one: bool,
    schur_condition: f64,
}

fn certify(a: &CertifyArgs) -> anyhow::Result<()> {
    let mu = read_measure(&a.measure)?;
    if mu.is_empty() {
        return Err(usage("certify needs a nonempty measure"));
    }
    let support = mu.positions();
    let v: Vec<Complex64> = mu.amplitudes().iter().map(|c| c / c.norm()).collect();
    let dual = dual_certificate(&support, &v, a.m, a.grid).map_err(lib)?;
    let zeros = vec![Complex64::new(0.0, 0.0); v.len()];
    let interpolation = verify_interpolation(&dual.certificate, &v, &zeros, 1e-8);
    let norms = norm_bound_report(&build_matrices(&support, a.m).map_err(lib)?).map_err(lib)?;
    let sup_norm = dual_sup(&dual.certificate.spectral(), a.grid, true).value;
    let report = CertifyReport {
        m: a.m,
        support: support.iter().map(|s| s.value()).collect(),
        alpha: dual.certificate.alpha.clone(),
        beta: dual.certificate.beta.clone(),
        interpolation,
        norms,
        sup_norm,
        sup_off_support: dual.sup_off_support,
        sup_far: dual.sup_far,
        strictly_below_one: dual.strictly_below_one,
        schur_condition: dual.certificate.schur_condition,
    };
    emit(a.out.as_deref(), &to_json(&report)?)?;
    if !interpolation.pass {
        return Err(numerical("certificate interpolation residual above tolerance"));
    }
    Ok(())
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn analyze(a: &AnalyzeArgs) -> anyhow::Result<()> {
    let mu = read_measure(&a.recovered)?;
    let mu0 = read_measure(&a.truth)?;
    if !(a.epsilon > 0.0) {
        return Err(usage("epsilon must be positive"));
    }
    let family = KernelFamily::from(a.kernel);
    let mut rows = Vec::new();
    for &n in &a.n {
        let kernel = kernel_family(family, n).map_err(lib)?;
        let r = error_report(&kernel, &mu, &mu0, a.m, a.epsilon, 0).map_err(lib)?;
        rows.push(r.csv_fields().to_vec());
    }
    let header: Vec<String> = ErrorReport::CSV_HEADER.iter().map(|s| s.to_string()).collect();
    emit(a.out.as_deref(), &csv_text(&header, &rows)?)
}

/// Hash of everything that determines a sweep's output.
fn config_hash(suite: &str, opts: &SuiteOptions) -> anyhow::Result<String> {
    #[derive(Serialize)]
    struct Key<'a> {
        suite: &'a str,
        version: &'a str,
        options: &'a SuiteOptions,
        bump_l: f64,
        solver: SolverConfig,
    }
    let key = Key {
        suite,
        version: env!("CARGO_PKG_VERSION"),
        options: opts,
        bump_l: DEFAULT_BUMP_L,
        solver: SolverConfig::default(),
    };
    let digest = Sha256::digest(serde_json::to_vec(&key)?);
    Ok(hex::encode(&digest[..8]))
}

fn sweep(a: &SweepArgs) -> anyhow::Result<()> {
    let suites = parse_suites(&a.suite).map_err(lib)?;
    fs::create_dir_all(&a.out).map_err(|e| usage(format!("{}: {e}", a.out.display())))?;
    let opts = SuiteOptions { seed: a.seed, trials: a.trials };
    let mut failed = Vec::new();
    for suite in suites {
        let out = run_suite(suite, &opts).map_err(lib)?;
        let hash = config_hash(suite.name(), &opts)?;
        let prefix = [a.seed.to_string(), hash.clone()];

        let mut header = vec!["seed".to_string(), "config_hash".to_string()];
        header.extend(out.table.header.iter().cloned());
        let rows: Vec<Vec<String>> = out
            .table
            .rows
            .iter()
            .map(|r| prefix.iter().cloned().chain(r.iter().cloned()).collect())
            .collect();
        write_file(&a.out.join(format!("{suite}.csv")), &csv_text(&header, &rows)?)?;

        // wall-clock checks stay out of the files so reruns are byte-identical
        let check_header: Vec<String> = ["seed", "config_hash", "check", "value", "relation", "threshold", "pass"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let check_rows: Vec<Vec<String>> = out
            .checks
            .iter()
            .filter(|c| c.name != "runtime_seconds")
            .map(|c| {
                let mut r = prefix.to_vec();
                r.extend([
                    c.name.clone(),
                    format!("{:e}", c.value),
                    c.relation.to_string(),
                    format!("{:e}", c.threshold),
                    c.pass.to_string(),
                ]);
                r
            })
            .collect();
        write_file(&a.out.join(format!("{suite}.checks.csv")), &csv_text(&check_header, &check_rows)?)?;

        for c in &out.checks {
            println!("    {c}");
        }
        let status = if out.pass() { "PASS" } else { "FAIL" };
        println!("{suite} {status} ({:.1} s)", out.seconds);
        if !out.pass() {
            failed.push(suite.name());
        }
    }
    if !failed.is_empty() {
        return Err(numerical(format!("failed suites: {}", failed.join(", "))));
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SPIKESOLVE_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| usage(format!("SPIKESOLVE_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Observe(a) => observe(a),
        Command::Solve(a) => solve(a),
        Command::Certify(a) => certify(a),
        Command::Analyze(a) => analyze(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Failure>() {
                Some(Failure::Numerical(_)) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
