//! Command-line driver. `run` never exits the process; it returns the exit
//! code together with what should go to stdout and stderr.

use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analyzer::{self, CheckReport, Expected, GridPoint, Status};
use crate::closed_form::{self, ClosedFormValue, OracleValue};
use crate::error::{Error, Result};
use crate::hadamard::SignMatrix;
use crate::optimizer::{estimate_constant, ConstantEstimate, ConstantKind, MethodChoice, OptimizerConfig};
use crate::space::{Exponent, SpaceSpec};

/// Version tag of every JSON document written by the CLI.
pub const SCHEMA: &str = "njconst-report/1";

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "NJCONST_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "njconst", version, about = "von Neumann-Jordan type constants of l_d^p")]
struct Cli {
    /// Worker threads (default: $NJCONST_THREADS, else all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate one constant.
    Compute(ComputeArgs),
    /// Compare estimates with closed forms over a grid.
    Verify(VerifyArgs),
    /// Run an analysis suite.
    Check(CheckArgs),
    /// Print the sign matrix A_n.
    Matrix(MatrixArgs),
}

#[derive(Debug, Args)]
struct OptArgs {
    #[arg(long, default_value_t = 200)]
    restarts: usize,
    #[arg(long = "max-iter", default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    #[arg(long, default_value_t = crate::functional::DEFAULT_SMOOTHING)]
    smoothing: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "enumeration-budget", default_value_t = 10_000_000)]
    enumeration_budget: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Enumerate,
    Multistart,
    SeedsOnly,
}

impl OptArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            max_iterations: self.max_iter,
            tolerance: self.tolerance,
            smoothing: self.smoothing,
            seed: self.seed,
            enumeration_budget: self.enumeration_budget,
            method: match self.method {
                MethodArg::Auto => MethodChoice::Auto,
                MethodArg::Enumerate => MethodChoice::Enumerate,
                MethodArg::Multistart => MethodChoice::Multistart,
                MethodArg::SeedsOnly => MethodChoice::SeedsOnly,
            },
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Debug, Args)]
struct ComputeArgs {
    /// e.g. lp:p=1.5,dim=3 or lp:p=inf,dim=4
    #[arg(long, value_parser = SpaceSpec::parse)]
    space: SpaceSpec,
    #[arg(long)]
    n: usize,
    /// upper | lower | upper-modified | lower-modified
    #[arg(long)]
    kind: ConstantKind,
    /// Also report the closed form; fails when its dimension requirement is unmet.
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    opt: OptArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// `default` or a comma list of n:p:d points, e.g. 2:1:2,3:4:4
    #[arg(long, default_value = "default")]
    grid: String,
    #[command(flatten)]
    opt: OptArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum Suite {
    /// Uniform non-l_n^1 verdict and modulus.
    Detect,
    /// Smallest n with a certified upper modified constant below n.
    BConvexity,
    /// Products of lower and upper constants of a space and its dual.
    Duality,
    /// Sampled inequalities.
    Inequalities,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long, value_parser = SpaceSpec::parse)]
    space: SpaceSpec,
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Largest n for b-convexity.
    #[arg(long = "n-max", default_value_t = 3)]
    n_max: usize,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[command(flatten)]
    opt: OptArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct MatrixArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    output: Option<String>,
}

/// The parsed command line as echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub space: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kind: Option<ConstantKind>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub suite: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub optimizer: Option<OptimizerConfig>,
    pub format: Format,
}

impl RunConfig {
    fn new(command: &str, format: Format) -> Self {
        RunConfig {
            command: command.into(),
            space: None,
            n: None,
            kind: None,
            suite: None,
            grid: None,
            n_max: None,
            samples: None,
            optimizer: None,
            format,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct ComputeBody<'a> {
    result: ComputeResult<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<&'a ClosedFormValue>,
}

#[derive(Serialize)]
struct ComputeResult<'a> {
    #[serde(flatten)]
    estimate: &'a ConstantEstimate,
    provenance: String,
}

#[derive(Serialize)]
struct ReportBody<'a> {
    report: &'a CheckReport,
}

#[derive(Serialize)]
struct ResultBody<'a, T: Serialize> {
    result: &'a T,
}

#[derive(Serialize)]
struct MatrixBody {
    matrix: Vec<Vec<i8>>,
}

/// Outcome of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl RunOutput {
    fn usage(msg: impl Into<String>) -> Self {
        let mut stderr = msg.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        RunOutput { code: EXIT_USAGE, stdout: String::new(), stderr }
    }
}

fn usage_error(e: &Error) -> bool {
    !matches!(e, Error::BudgetExceeded { .. })
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, S>(argv: I) -> RunOutput
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    RunOutput { code: EXIT_OK, stdout: e.to_string(), stderr: String::new() }
                }
                _ => RunOutput::usage(e.render().to_string().lines().next().unwrap_or("usage error")),
            };
        }
    };
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(t) => Some(t),
                Err(_) => return RunOutput::usage(format!("error: {THREADS_ENV} must be a positive integer")),
            },
            Err(_) => None,
        },
    };
    match threads {
        Some(0) => RunOutput::usage("error: thread count must be a positive integer"),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => RunOutput::usage(format!("error: {e}")),
        },
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> RunOutput {
    let (output, result) = match command {
        Command::Compute(a) => {
            let out = a.out.output.clone();
            (out, compute(a))
        }
        Command::Verify(a) => {
            let out = a.out.output.clone();
            (out, verify(a))
        }
        Command::Check(a) => {
            let out = a.out.output.clone();
            (out, check(a))
        }
        Command::Matrix(a) => {
            let out = a.output.clone();
            (out, matrix(a))
        }
    };
    match result {
        Ok((code, text)) => match output {
            Some(path) => match std::fs::write(&path, &text) {
                Ok(()) => RunOutput { code, stdout: String::new(), stderr: String::new() },
                Err(e) => RunOutput::usage(format!("error: cannot write {path}: {e}")),
            },
            None => RunOutput { code, stdout: text, stderr: String::new() },
        },
        Err(e) if usage_error(&e) => RunOutput::usage(format!("error: {e}")),
        Err(e) => RunOutput { code: EXIT_CHECK_FAILED, stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}

fn to_json<T: Serialize>(config: &RunConfig, body: T) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope { schema: SCHEMA, config, body })
        .expect("report serialization");
    s.push('\n');
    s
}

/// `x` with 7 significant digits.
pub fn display_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..7).contains(&exp) {
        return format!("{x:.6e}");
    }
    let decimals = (6 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn kebab<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn compute(a: ComputeArgs) -> Result<(i32, String)> {
    let cfg = a.opt.config();
    cfg.validate()?;
    let mut config = RunConfig::new("compute", a.out.format);
    config.space = Some(a.space.to_string());
    config.n = Some(a.n);
    config.kind = Some(a.kind);
    config.optimizer = Some(cfg.clone());
    let oracle = if a.oracle {
        Some(closed_form::oracle(a.kind, a.n, a.space.exponent, a.space.dimension)?)
    } else {
        None
    };
    let est = estimate_constant(&a.space, a.n, a.kind, &cfg)?;
    let provenance = analyzer::estimate_provenance(&est);
    let text = match a.out.format {
        Format::Json => to_json(
            &config,
            ComputeBody { result: ComputeResult { estimate: &est, provenance }, oracle: oracle.as_ref() },
        ),
        Format::Csv => {
            let mut s = String::from(
                "kind,value,method,bound_status,restarts_used,iterations_total,seed,oracle,provenance\n",
            );
            let oracle_s = oracle.as_ref().map(|o| oracle_string(&o.value)).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                est.kind,
                est.value,
                kebab(&est.method),
                kebab(&est.bound_status),
                est.restarts_used,
                est.iterations_total,
                est.seed,
                csv_field(&oracle_s),
                csv_field(&provenance)
            );
            s
        }
        Format::Text => {
            let mut s = format!(
                "{} constant of {} at n = {}: {}\n  {}\n  certificate:\n",
                est.kind,
                a.space,
                a.n,
                display_number(est.value),
                provenance
            );
            for v in &est.certificate.vectors {
                let coords: Vec<String> = v.coords.iter().map(|c| display_number(*c)).collect();
                let _ = writeln!(s, "    [{}]", coords.join(", "));
            }
            if let Some(o) = &oracle {
                let _ = writeln!(s, "  oracle: {} ({})", oracle_display(&o.value), o.provenance);
            }
            s
        }
    };
    Ok((EXIT_OK, text))
}

fn oracle_string(o: &OracleValue) -> String {
    match o {
        OracleValue::Point { value } => value.to_string(),
        OracleValue::Interval { lo, hi } => format!("[{lo};{hi}]"),
    }
}

fn oracle_display(o: &OracleValue) -> String {
    match o {
        OracleValue::Point { value } => display_number(*value),
        OracleValue::Interval { lo, hi } => format!("[{}, {}]", display_number(*lo), display_number(*hi)),
    }
}

fn expected_string(e: &Expected, display: bool) -> String {
    let f = |x: f64| if display { display_number(x) } else { x.to_string() };
    match e {
        Expected::Value { value } => f(*value),
        Expected::Interval { lo, hi } => format!("[{};{}]", f(*lo), f(*hi)),
        Expected::AtLeast { bound } => format!(">={}", f(*bound)),
        Expected::AtMost { bound } => format!("<={}", f(*bound)),
        Expected::None => String::new(),
    }
}

/// Parses `default` or `n:p:d,n:p:d,...`.
pub fn parse_grid(s: &str) -> Result<Vec<GridPoint>> {
    if s == "default" {
        return Ok(analyzer::default_grid());
    }
    s.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').collect();
            let bad = || Error::InvalidConfig(format!("grid point `{item}`: expected n:p:d"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let n = parts[0].parse::<usize>().map_err(|_| bad())?;
            let p = parts[1].parse::<Exponent>()?;
            let d = parts[2].parse::<usize>().map_err(|_| bad())?;
            SpaceSpec::new(p, d)?;
            if n < 2 {
                return Err(Error::NOutOfRange { n, min: 2, max: crate::functional::DEFAULT_MAX_N });
            }
            Ok((n, p, d))
        })
        .collect()
}

fn verify(a: VerifyArgs) -> Result<(i32, String)> {
    let cfg = a.opt.config();
    let grid = parse_grid(&a.grid)?;
    let mut config = RunConfig::new("verify", a.out.format);
    config.grid = Some(a.grid.clone());
    config.optimizer = Some(cfg.clone());
    let report = analyzer::reproduce_table(&grid, &cfg)?;
    Ok((report_code(&report), render_report(&config, &report)))
}

fn report_code(r: &CheckReport) -> i32 {
    if r.all_passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn render_report(config: &RunConfig, report: &CheckReport) -> String {
    match config.format {
        Format::Json => to_json(config, ReportBody { report }),
        Format::Csv => {
            let mut s = String::from("record,name,status,observed,expected,gap,tolerance,provenance\n");
            for c in &report.checks {
                let observed: Vec<String> = c.observed.iter().map(f64::to_string).collect();
                let _ = writeln!(
                    s,
                    "check,{},{},{},{},,{},{}",
                    csv_field(&c.name),
                    kebab(&c.status),
                    csv_field(&observed.join(";")),
                    csv_field(&expected_string(&c.expected, false)),
                    c.tolerance,
                    csv_field(&c.provenance)
                );
            }
            for r in &report.table {
                let name = format!("n={} p={} d={} {}", r.n, r.p, r.d, r.kind);
                let prov = [r.oracle_provenance.as_deref(), r.estimate_provenance.as_deref(), r.note.as_deref()]
                    .into_iter()
                    .flatten()
                    .collect::<Vec<_>>()
                    .join("; ");
                let _ = writeln!(
                    s,
                    "row,{},{},{},{},{},{},{}",
                    csv_field(&name),
                    kebab(&r.status),
                    r.estimate.map(|x| x.to_string()).unwrap_or_default(),
                    csv_field(&r.oracle.as_ref().map(oracle_string).unwrap_or_default()),
                    r.gap.map(|x| x.to_string()).unwrap_or_default(),
                    r.tolerance,
                    csv_field(&prov)
                );
            }
            s
        }
        Format::Text => {
            let mut s = format!("{}\n", report.suite);
            for c in &report.checks {
                let observed: Vec<String> = c.observed.iter().map(|x| display_number(*x)).collect();
                let _ = write!(
                    s,
                    "  {:<4} {}  observed [{}]",
                    status_tag(c.status),
                    c.name,
                    observed.join(", "),
                );
                if c.expected != Expected::None {
                    let _ = write!(s, " expected {}", expected_string(&c.expected, true));
                }
                if let Some(note) = &c.note {
                    let _ = write!(s, "  ({note})");
                }
                s.push('\n');
            }
            for r in &report.table {
                let _ = write!(s, "  {:<4} n={} p={} d={} {:<14}", status_tag(r.status), r.n, r.p, r.d, r.kind.as_str());
                match (r.estimate, &r.oracle) {
                    (Some(e), Some(o)) => {
                        let _ = write!(
                            s,
                            " estimate {} oracle {} gap {}",
                            display_number(e),
                            oracle_display(o),
                            display_number(r.gap.unwrap_or(f64::NAN))
                        );
                    }
                    _ => {
                        let _ = write!(s, " {}", r.note.as_deref().unwrap_or(""));
                    }
                }
                s.push('\n');
            }
            let sm = report.summary;
            let _ = writeln!(s, "{} checks: {} passed, {} failed, {} skipped", sm.total, sm.passed, sm.failed, sm.skipped);
            s
        }
    }
}

fn status_tag(s: Status) -> &'static str {
    match s {
        Status::Pass => "PASS",
        Status::Fail => "FAIL",
        Status::Skip => "SKIP",
    }
}

fn check(a: CheckArgs) -> Result<(i32, String)> {
    let cfg = a.opt.config();
    cfg.validate()?;
    let mut config = RunConfig::new("check", a.out.format);
    config.space = Some(a.space.to_string());
    config.suite = Some(kebab(&a.suite));
    config.optimizer = Some(cfg.clone());
    match a.suite {
        Suite::Detect => {
            config.n = Some(a.n);
            let det = analyzer::detect_non_ln1(&a.space, a.n, &cfg)?;
            let text = match a.out.format {
                Format::Json => to_json(&config, ResultBody { result: &det }),
                Format::Csv => {
                    let mut s = String::from("n,verdict,delta_james,delta_sphere,certified_value,plain_verdict,estimate,certification\n");
                    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{}",
                        det.n,
                        kebab(&det.verdict),
                        opt(det.delta_james),
                        opt(det.delta_sphere),
                        opt(det.certified_value),
                        kebab(&det.plain_verdict),
                        det.estimate.value,
                        csv_field(&det.certification)
                    );
                    s
                }
                Format::Text => {
                    let opt = |x: Option<f64>| x.map(display_number).unwrap_or_else(|| "-".into());
                    format!(
                        "{} n = {}: {}\n  delta (unit vectors) {}\n  delta (S(l_n^2(X))) {}\n  upper modified {} ({})\n  from the upper constant: {}\n",
                        a.space,
                        det.n,
                        kebab(&det.verdict),
                        opt(det.delta_james),
                        opt(det.delta_sphere),
                        display_number(det.estimate.value),
                        det.certification,
                        kebab(&det.plain_verdict)
                    )
                }
            };
            Ok((EXIT_OK, text))
        }
        Suite::BConvexity => {
            config.n_max = Some(a.n_max);
            let scan = analyzer::b_convexity_scan(&a.space, a.n_max, &cfg)?;
            let text = match a.out.format {
                Format::Json => to_json(&config, ResultBody { result: &scan }),
                Format::Csv => format!(
                    "b_convex,witness_n\n{},{}\n",
                    kebab(&scan.b_convex),
                    scan.witness_n.map(|n| n.to_string()).unwrap_or_default()
                ),
                Format::Text => format!(
                    "{} up to n = {}: {}{}\n",
                    a.space,
                    a.n_max,
                    kebab(&scan.b_convex),
                    scan.witness_n.map(|n| format!(", witness n = {n}")).unwrap_or_default()
                ),
            };
            Ok((EXIT_OK, text))
        }
        Suite::Duality => {
            config.n = Some(a.n);
            let report = analyzer::duality_check(a.space.exponent, a.space.dimension, a.n, &cfg)?;
            Ok((report_code(&report), render_report(&config, &report)))
        }
        Suite::Inequalities => {
            config.n = Some(a.n);
            config.samples = Some(a.samples);
            let report = analyzer::inequality_suite(&a.space, a.n, a.samples, cfg.seed)?;
            Ok((report_code(&report), render_report(&config, &report)))
        }
    }
}

fn matrix(a: MatrixArgs) -> Result<(i32, String)> {
    let m = SignMatrix::new(a.n)?;
    let mut config = RunConfig::new("matrix", a.format);
    config.n = Some(a.n);
    let text = match a.format {
        Format::Csv => m.to_csv(),
        Format::Json => to_json(&config, MatrixBody { matrix: m.to_rows() }),
        Format::Text => m
            .row_iter()
            .map(|row| row.iter().map(|a| format!("{a:>3}")).collect::<String>() + "\n")
            .collect(),
    };
    Ok((EXIT_OK, text))
}
