//! `mle-risk`: plug-in estimation, exact bias, risk bounds, moduli of
//! smoothness and risk sweeps from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 enumeration
//! larger than `--cap`.

mod output;

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use mle_risk::bernstein::exact_bias;
use mle_risk::bounds::{lower_risk, minimax_reference, mle_rate_reference, upper_risk_with, LowerParams, UpperOptions};
use mle_risk::estimators::EstimatorSpec;
use mle_risk::model::{parse_distribution, CountVector, DiscreteDistribution, Functional};
use mle_risk::moduli::{omega_closed, omega_numeric_detail, ModulusKind, DEFAULT_GRID};
use mle_risk::risklab::{
    exact_moments_with_cap, hybrid_moments, mc_moments, sweep, RiskReport, SupportSpec, SweepConfig, SweepEstimator,
    SweepMethod, DEFAULT_OUTCOME_CAP, SCHEMA_VERSION,
};

use output::{write_records, write_single, Format};

#[derive(Parser, Debug)]
#[command(name = "mle-risk", version, about = "Risk of plug-in estimators of entropy and power sums")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for the parallel parts (default: available cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Apply an estimator to a vector of counts.
    Estimate(EstimateArgs),
    /// Exact bias E F(P_n) - F(P) at a distribution.
    Bias(BiasArgs),
    /// Upper and lower worst-case risk bounds.
    Bounds(BoundsArgs),
    /// Modulus of smoothness of the functional's element-wise map.
    Modulus(ModulusArgs),
    /// Bias, variance and mean squared error at one distribution.
    Risk(RiskArgs),
    /// Risk and bounds over a grid of (functional, S, n, distribution).
    ///
    /// Columns: schema_version, functional, alpha, estimator, distribution, s, n,
    /// method, replicates, seed, truth, bias, variance, mse, ci_halfwidth,
    /// upper_bias, upper_variance, upper_total, lower_total, lower_valid,
    /// minimax_rate, mle_rate, phase_boundary, log_n_over_log_s, error.
    Sweep(SweepArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Estimate(_) => "estimate",
            Command::Bias(_) => "bias",
            Command::Bounds(_) => "bounds",
            Command::Modulus(_) => "modulus",
            Command::Risk(_) => "risk",
            Command::Sweep(_) => "sweep",
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct FunctionalArg {
    /// entropy or power:<alpha>.
    #[arg(long, value_parser = functional_spec, conflicts_with = "alpha")]
    functional: Option<String>,

    /// Shorthand for --functional power:<alpha>.
    #[arg(long)]
    alpha: Option<f64>,
}

impl FunctionalArg {
    fn spec(&self) -> String {
        match (&self.functional, self.alpha) {
            (Some(f), _) => f.clone(),
            (None, Some(a)) => format!("power:{a}"),
            (None, None) => "entropy".into(),
        }
    }

    fn resolve(&self) -> Result<Functional> {
        Functional::parse(&self.spec()).map_err(|e| usage(format!("--alpha: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EstimatorArg {
    Mle,
    MillerMadow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    Exact,
    Bernstein,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SweepMethodArg {
    Auto,
    Exact,
    Bernstein,
    Mc,
}

#[derive(Args, Debug, Serialize)]
struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    functional: FunctionalArg,

    /// Comma-separated counts, e.g. 3,0,1.
    #[arg(long, required = true, value_delimiter = ',')]
    counts: Vec<u64>,

    #[arg(long, value_enum, default_value = "mle")]
    estimator: EstimatorArg,

    /// Alphabet size for the Miller–Madow correction (default: number of counts).
    #[arg(long = "S", value_parser = clap::value_parser!(u64).range(1..))]
    support: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct BiasArgs {
    #[command(flatten)]
    #[serde(flatten)]
    functional: FunctionalArg,

    /// uniform:S, w:S:n, capped:S:n, file:path.json, inline JSON, or - for stdin.
    #[arg(long, value_parser = dist_spec)]
    dist: String,

    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,

    #[arg(long, value_enum, default_value = "bernstein")]
    method: MethodArg,

    #[arg(long, value_enum, default_value = "mle")]
    estimator: EstimatorArg,

    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(2..))]
    replicates: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Largest number of outcomes --method exact will enumerate.
    #[arg(long, default_value_t = DEFAULT_OUTCOME_CAP)]
    cap: u128,
}

#[derive(Args, Debug, Serialize)]
struct BoundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    functional: FunctionalArg,

    #[arg(long = "S", value_parser = clap::value_parser!(u64).range(1..))]
    support: u64,

    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,

    /// Constant of the ln²S/n minimax term in the entropy lower bound.
    #[arg(long)]
    c_minimax: Option<f64>,

    /// Use the tighter intermediate constants in the upper bound.
    #[arg(long)]
    sharp: bool,
}

#[derive(Args, Debug, Serialize)]
struct ModulusArgs {
    #[command(flatten)]
    #[serde(flatten)]
    functional: FunctionalArg,

    /// omega1, omega2, omega1phi or omega2phi.
    #[arg(long, value_parser = modulus_kind)]
    kind: ModulusKind,

    #[arg(long)]
    t: f64,

    /// Grid points for the numeric supremum.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
}

#[derive(Args, Debug, Serialize)]
struct RiskArgs {
    #[command(flatten)]
    #[serde(flatten)]
    functional: FunctionalArg,

    /// uniform:S, w:S:n, capped:S:n, file:path.json, inline JSON, or - for stdin.
    #[arg(long, value_parser = dist_spec)]
    dist: String,

    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,

    #[arg(long, value_enum, default_value = "mle")]
    estimator: EstimatorArg,

    /// exact enumerates, bernstein pairs the exact bias with sampled variance, mc samples both.
    #[arg(long, value_enum, default_value = "exact")]
    method: MethodArg,

    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(2..))]
    replicates: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = DEFAULT_OUTCOME_CAP)]
    cap: u128,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated functionals.
    #[arg(long, value_delimiter = ',', value_parser = functional_spec)]
    functional: Vec<String>,

    /// Comma-separated exponents, added as power:<alpha>.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,

    #[arg(long, value_enum, value_delimiter = ',', default_value = "mle")]
    estimator: Vec<EstimatorArg>,

    /// Comma-separated alphabet sizes; n ties S to the sample size.
    #[arg(long = "S", required = true, value_delimiter = ',', value_parser = support_spec)]
    support: Vec<SupportSpec>,

    #[arg(long, required = true, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    n: Vec<u64>,

    /// Comma-separated tags: uniform, w, capped, worst.
    #[arg(long, value_delimiter = ',', default_value = "uniform", value_parser = ["uniform", "w", "capped", "worst"])]
    dist: Vec<String>,

    #[arg(long, value_enum, default_value = "auto")]
    method: SweepMethodArg,

    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(2..))]
    replicates: u64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = DEFAULT_OUTCOME_CAP)]
    cap: u128,

    #[arg(long)]
    c_minimax: Option<f64>,
}

/// Error class that maps to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

fn functional_spec(s: &str) -> std::result::Result<String, String> {
    Functional::parse(s).map(|_| s.trim().to_string()).map_err(|e| e.to_string())
}

fn dist_spec(s: &str) -> std::result::Result<String, String> {
    if s.trim() == "-" {
        return Ok(s.trim().to_string());
    }
    parse_distribution(s).map(|_| s.trim().to_string()).map_err(|e| e.to_string())
}

fn modulus_kind(s: &str) -> std::result::Result<ModulusKind, String> {
    ModulusKind::parse(s).map_err(|e| e.to_string())
}

fn support_spec(s: &str) -> std::result::Result<SupportSpec, String> {
    SupportSpec::parse(s).map_err(|e| e.to_string())
}

/// Accepts a bare `{"probs": [...]}` or any document of ours carrying a
/// `distribution` field, so outputs can be piped straight back in.
fn load_dist(spec: &str) -> Result<DiscreteDistribution> {
    if spec != "-" {
        return parse_distribution(spec).map_err(|e| usage(format!("--dist: {e}")));
    }
    let mut text = String::new();
    io::stdin().read_to_string(&mut text)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| usage(format!("--dist -: stdin is not JSON: {e}")))?;
    let inner = doc.get("distribution").unwrap_or(&doc);
    parse_distribution(&inner.to_string()).map_err(|e| usage(format!("--dist -: {e}")))
}

fn estimator_spec(arg: EstimatorArg, func: &Functional, support: usize) -> Result<EstimatorSpec> {
    let spec = match arg {
        EstimatorArg::Mle => EstimatorSpec::PlugIn,
        EstimatorArg::MillerMadow => EstimatorSpec::MillerMadow { support },
    };
    spec.check(func).map_err(|e| usage(format!("--estimator: {e}")))?;
    Ok(spec)
}

fn object(v: impl Serialize) -> Result<Map<String, Value>> {
    match serde_json::to_value(v)? {
        Value::Object(m) => Ok(m),
        other => Err(anyhow!("expected a JSON object, got {other}")),
    }
}

fn dist_value(dist: &DiscreteDistribution) -> Value {
    json!({ "probs": dist.probs() })
}

fn run_estimate(a: &EstimateArgs) -> Result<Map<String, Value>> {
    let func = a.functional.resolve()?;
    let counts = CountVector::new(a.counts.clone());
    if counts.n() == 0 {
        return Err(usage("--counts: counts must not all be zero"));
    }
    let support = a.support.map_or(counts.support_size(), |s| s as usize);
    let est = estimator_spec(a.estimator, &func, support)?;
    let value = est.estimate(&func, &counts)?;
    let mut body = Map::new();
    body.insert("estimate".into(), json!(value));
    body.insert("estimator".into(), json!(est.tag()));
    body.insert("n".into(), json!(counts.n()));
    Ok(body)
}

/// Sampling and enumeration knobs shared by `bias` and `risk`.
struct Budget {
    replicates: u64,
    seed: u64,
    cap: u128,
}

fn risk_report(
    method: MethodArg,
    est: &EstimatorSpec,
    func: &Functional,
    dist: &DiscreteDistribution,
    n: u64,
    b: Budget,
) -> Result<RiskReport> {
    Ok(match method {
        MethodArg::Exact => exact_moments_with_cap(est, func, dist, n, b.cap)?,
        MethodArg::Bernstein => hybrid_moments(est, func, dist, n, b.replicates, b.seed)?,
        MethodArg::Mc => mc_moments(est, func, dist, n, b.replicates, b.seed)?,
    })
}

fn run_bias(a: &BiasArgs) -> Result<Map<String, Value>> {
    let func = a.functional.resolve()?;
    let dist = load_dist(&a.dist)?;
    let est = estimator_spec(a.estimator, &func, dist.support_size())?;
    let mut body = Map::new();
    if a.method == MethodArg::Bernstein {
        let decomposition = exact_bias(&func, &dist, a.n)?;
        let correction = match est {
            EstimatorSpec::MillerMadow { support } => (support as f64 - 1.0) / (2.0 * a.n as f64),
            _ => 0.0,
        };
        body.insert("total".into(), json!(decomposition.total + correction));
        body.insert("truth".into(), json!(mle_risk::model::eval_functional(&func, &dist)?));
        body.insert("per_symbol".into(), json!(decomposition.per_symbol));
    } else {
        let r = risk_report(
            a.method,
            &est,
            &func,
            &dist,
            a.n,
            Budget { replicates: a.replicates, seed: a.seed, cap: a.cap },
        )?;
        body.insert("total".into(), json!(r.bias));
        body.insert("truth".into(), json!(r.truth));
        body.insert("replicates".into(), json!(r.replicates));
        body.insert("seed".into(), json!(r.seed));
    }
    body.insert("distribution".into(), dist_value(&dist));
    Ok(body)
}

fn run_bounds(a: &BoundsArgs) -> Result<Map<String, Value>> {
    let func = a.functional.resolve()?;
    let (s, n) = (a.support as usize, a.n);
    let upper = upper_risk_with(&func, s, n, UpperOptions { sharp_constants: a.sharp })?;
    let lower = lower_risk(&func, s, n, LowerParams { c_minimax: a.c_minimax });
    let mut body = object(&upper)?;
    body.insert("lower".into(), serde_json::to_value(&lower)?);
    body.insert("minimax_rate".into(), json!(minimax_reference(&func, s, n)?));
    body.insert("mle_rate".into(), json!(mle_rate_reference(&func, s, n)?));
    Ok(body)
}

fn run_modulus(a: &ModulusArgs) -> Result<Map<String, Value>> {
    let func = a.functional.resolve()?;
    // no closed form is not an error: the numeric value still stands
    let closed = omega_closed(a.kind, &func, a.t).ok();
    let f = |x: f64| func.value(x);
    let est = omega_numeric_detail(a.kind, &f, a.t, a.grid).map_err(|e| usage(format!("--t/--grid: {e}")))?;
    let mut body = Map::new();
    body.insert("kind".into(), serde_json::to_value(a.kind)?);
    body.insert("t".into(), json!(a.t));
    body.insert("closed".into(), json!(closed));
    body.insert("numeric".into(), json!(est.value));
    body.insert("u".into(), json!(est.u));
    body.insert("v".into(), json!(est.v));
    Ok(body)
}

fn run_risk(a: &RiskArgs) -> Result<Map<String, Value>> {
    let func = a.functional.resolve()?;
    let dist = load_dist(&a.dist)?;
    let est = estimator_spec(a.estimator, &func, dist.support_size())?;
    let report =
        risk_report(a.method, &est, &func, &dist, a.n, Budget { replicates: a.replicates, seed: a.seed, cap: a.cap })?;
    let mut body = object(&report)?;
    body.insert("distribution".into(), dist_value(&dist));
    Ok(body)
}

fn sweep_config(a: &SweepArgs) -> SweepConfig {
    let mut functionals = a.functional.clone();
    functionals.extend(a.alpha.iter().map(|x| format!("power:{x}")));
    if functionals.is_empty() {
        functionals.push("entropy".into());
    }
    let mut estimators: Vec<SweepEstimator> = Vec::new();
    for e in &a.estimator {
        let e = match e {
            EstimatorArg::Mle => SweepEstimator::Mle,
            EstimatorArg::MillerMadow => SweepEstimator::MillerMadow,
        };
        if !estimators.contains(&e) {
            estimators.push(e);
        }
    }
    SweepConfig {
        functionals,
        estimators,
        supports: a.support.clone(),
        ns: a.n.clone(),
        distributions: a.dist.clone(),
        method: match a.method {
            SweepMethodArg::Auto => SweepMethod::Auto,
            SweepMethodArg::Exact => SweepMethod::Exact,
            SweepMethodArg::Bernstein => SweepMethod::Bernstein,
            SweepMethodArg::Mc => SweepMethod::Mc,
        },
        replicates: a.replicates,
        seed: a.seed,
        cap: a.cap,
        c_minimax: a.c_minimax,
    }
}

/// Argument echo with the functional resolved, so defaults and --alpha show.
fn echo_args(a: impl Serialize, f: &FunctionalArg) -> Result<Value> {
    let mut v = serde_json::to_value(a)?;
    v["functional"] = json!(f.spec());
    Ok(v)
}

fn config_echo(cli: &Cli, args: Value) -> Value {
    json!({
        "command": cli.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "schema_version": SCHEMA_VERSION,
        "format": cli.format.to_possible_value().map(|v| v.get_name().to_string()),
        "threads": rayon::current_num_threads(),
        "args": args,
    })
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t as usize).build_global()?;
    }
    let sink: Box<dyn Write> = match &cli.out {
        Some(path) => {
            Box::new(File::create(path).map_err(|e| usage(format!("--out: cannot create {}: {e}", path.display())))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);

    if let Command::Sweep(a) = &cli.command {
        let cfg = sweep_config(a);
        let records = sweep(&cfg)?;
        write_records(&mut out, cli.format, &config_echo(cli, serde_json::to_value(&cfg)?), &records)?;
        out.flush()?;
        return Ok(());
    }

    let (args, body) = match &cli.command {
        Command::Estimate(a) => (echo_args(a, &a.functional)?, run_estimate(a)?),
        Command::Bias(a) => (echo_args(a, &a.functional)?, run_bias(a)?),
        Command::Bounds(a) => (echo_args(a, &a.functional)?, run_bounds(a)?),
        Command::Modulus(a) => (echo_args(a, &a.functional)?, run_modulus(a)?),
        Command::Risk(a) => (echo_args(a, &a.functional)?, run_risk(a)?),
        Command::Sweep(_) => unreachable!("handled above"),
    };
    write_single(&mut out, cli.format, &config_echo(cli, args), body)?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if let Some(mle_risk::Error::FeasibilityCapExceeded { outcomes, cap }) = err.downcast_ref() {
                // saturated count: the true number does not fit in u128
                let count = if *outcomes == u128::MAX { format!("more than {outcomes}") } else { outcomes.to_string() };
                eprintln!(
                    "error: exact enumeration needs {count} outcomes, above --cap {cap}; \
                     use --method mc (or --method bernstein) or raise --cap"
                );
                return ExitCode::from(3);
            }
            eprintln!("error: {err}");
            if err.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
