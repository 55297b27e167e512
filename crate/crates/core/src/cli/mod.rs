//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when the computation fails, 2 on a usage
//! error. With `--json`, results and failures are printed as JSON documents
//! in which every integer of unbounded size is a decimal string.

mod fixture;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use serde_json::{json, Value};

use crate::error::Error;
use crate::experiments::{
    bench_csv, benchmark_phases, estimate_success_rate, HypothesisTrialResult, BRUTE_FORCE_LIMIT,
};
use crate::factoring::{factor, order_via_index_calculus, DriverConfig, Factorization};
use crate::order::OrderReport;

pub use fixture::{
    verify_fixture, Check, Fixture, FixtureRelation, FixtureReport, BUNDLED_FIXTURE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "index-factor",
    version,
    about = "Multiplicative orders and factorizations from smooth relations modulo n"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a multiple of ord(g) modulo n (or the exact order with --refine).
    Order(OrderArgs),
    /// Factor n completely.
    Factor(FactorArgs),
    /// Measure how often the gcd equals the exact order, per value of c.
    Hypothesis(HypothesisArgs),
    /// Time relation collection, the kernel and the gcd for several bounds.
    Bench(BenchArgs),
    /// Re-derive every quantity of a worked-example fixture.
    VerifyFixture(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Factor-base bound B (default grows with n).
    #[arg(long)]
    pub bound: Option<u64>,
    /// Relations collected beyond the factor-base size.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub extra: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    /// Cap on smoothness tests per order computation.
    #[arg(long)]
    pub max_attempts: Option<u64>,
    /// Adjoin -1 to the factor base.
    #[arg(long)]
    pub include_unit: bool,
    /// Try the kernel every K relations and stop once it has dimension c + 1
    /// (0 picks K from the base size).
    #[arg(long, value_name = "K")]
    pub kernel_interval: Option<usize>,
}

impl PipelineArgs {
    fn config(&self) -> DriverConfig {
        DriverConfig {
            bound_override: self.bound,
            extra_relations: self.extra as usize,
            seed: self.seed,
            workers: self.workers as usize,
            include_unit: self.include_unit,
            attempt_budget: self.max_attempts,
            kernel_check_interval: self.kernel_interval,
            ..DriverConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
    /// Progress and timings on stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    #[arg(long, value_parser = parse_modulus)]
    pub n: BigUint,
    #[arg(long, value_parser = parse_big)]
    pub g: BigUint,
    /// Reduce the gcd to the exact order.
    #[arg(long)]
    pub refine: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FactorArgs {
    #[arg(long, value_parser = parse_modulus)]
    pub n: BigUint,
    /// Random bases tried per composite.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_bases: u64,
    /// Trial-divide below this first (default: the factor-base bound).
    #[arg(long)]
    pub trial_limit: Option<u64>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct HypothesisArgs {
    #[arg(long, default_value_t = 62389)]
    pub n: u64,
    #[arg(long, default_value_t = 43)]
    pub g: u64,
    /// Values of c, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub extra: Vec<usize>,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long)]
    pub bound: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub include_unit: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Moduli, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_modulus, default_value = "62389")]
    pub n: Vec<BigUint>,
    /// Factor-base bounds, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400")]
    pub bound: Vec<u64>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub extra: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_attempts: Option<u64>,
    /// Kernel runs per setting; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    /// Fixture document (default: the bundled n = 62389 example).
    #[arg(long)]
    pub fixture_path: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_big(s: &str) -> Result<BigUint, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("{s:?} is not a non-negative decimal integer"))
}

fn parse_modulus(s: &str) -> Result<BigUint, String> {
    let n = parse_big(s)?;
    if n < BigUint::from(2u32) {
        return Err(format!("n must be at least 2, got {n}"));
    }
    Ok(n)
}

/// Parses `args` (including the program name) and runs the command,
/// writing results to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    execute(&cli.command, out, err)
}

/// Runs an already parsed command.
pub fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match command {
        Command::Order(a) => run_order(a, out, err),
        Command::Factor(a) => run_factor(a, out, err),
        Command::Hypothesis(a) => run_hypothesis(a, out, err),
        Command::Bench(a) => run_bench(a, out),
        Command::VerifyFixture(a) => run_fixture(a, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Algorithm { error, json }) => {
            if json {
                let _ = writeln!(out, "{}", pretty(&error_document(&error)));
            }
            let _ = writeln!(err, "error: {error}");
            EXIT_FAILURE
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

enum Failure {
    Usage(String),
    Algorithm { error: Error, json: bool },
    Io(std::io::Error),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type CmdResult = Result<i32, Failure>;

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("output serializes")
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::ImmediateFactor(_) => "immediate-factor",
        Error::Exhausted => "exhausted",
        Error::BudgetExhausted { .. } => "budget-exhausted",
        Error::AllAlphasZero => "all-alphas-zero",
        Error::Verification(_) => "verification",
        Error::Incomplete { .. } => "incomplete",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

/// `{"error": {"kind", "message", ...}}` with kind-specific fields.
pub fn error_document(e: &Error) -> Value {
    let mut body = json!({ "kind": error_kind(e), "message": e.to_string() });
    match e {
        Error::ImmediateFactor(d) => body["factor"] = json!(d.to_string()),
        Error::BudgetExhausted {
            budget,
            found,
            wanted,
            ..
        } => {
            body["budget"] = json!(budget.to_string());
            body["found"] = json!(found);
            body["wanted"] = json!(wanted);
        }
        Error::Verification(g) => body["order_multiple"] = json!(g.to_string()),
        Error::Incomplete { partial, .. } => {
            body["partial"] = serde_json::to_value(partial.as_ref()).expect("serializes")
        }
        _ => {}
    }
    json!({ "error": body })
}

fn check_base(n: &BigUint, g: &BigUint) -> Result<(), Failure> {
    if *g <= BigUint::from(1u32) || g >= n {
        return Err(Failure::Usage(format!(
            "g must satisfy 1 < g < n, got g = {g}, n = {n}"
        )));
    }
    Ok(())
}

fn run_order(a: &OrderArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    check_base(&a.n, &a.g)?;
    let config = DriverConfig {
        refine: a.refine,
        ..a.pipeline.config()
    };
    let start = Instant::now();
    let report =
        order_via_index_calculus(&a.n, &a.g, &config).map_err(|error| Failure::Algorithm {
            error,
            json: a.output.json,
        })?;
    if a.output.verbose {
        writeln!(
            err,
            "{} relations from {} smoothness tests, {} top-ups, {:.3}s",
            report.relations_used,
            report.attempts,
            report.top_ups,
            start.elapsed().as_secs_f64()
        )?;
    }
    if a.output.json {
        writeln!(out, "{}", pretty(&report))?;
    } else {
        write_order_text(&report, out)?;
    }
    Ok(EXIT_OK)
}

fn write_order_text(r: &OrderReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "n = {}, g = {}", r.n, r.g)?;
    writeln!(
        out,
        "order multiple G = {} from {} alphas ({} zero)",
        r.order_multiple, r.kernel_dim, r.zero_alpha_count
    )?;
    if let Some(order) = &r.refined_order {
        writeln!(out, "order = {order}")?;
    }
    Ok(())
}

fn run_factor(a: &FactorArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let config = DriverConfig {
        max_g_attempts: a.max_bases as usize,
        trial_division_limit: a.trial_limit,
        ..a.pipeline.config()
    };
    let start = Instant::now();
    let result = factor(&a.n, &config);
    if a.output.verbose {
        if let Ok(f) = &result {
            writeln!(
                err,
                "{} order computations, {:.3}s",
                f.trace.len(),
                start.elapsed().as_secs_f64()
            )?;
        }
    }
    let f = result.map_err(|error| Failure::Algorithm {
        error,
        json: a.output.json,
    })?;
    if a.output.json {
        writeln!(out, "{}", pretty(&f))?;
    } else {
        writeln!(out, "{}", factorization_text(&f))?;
    }
    Ok(EXIT_OK)
}

/// `n = p1^e1 * p2 * ...`
pub fn factorization_text(f: &Factorization) -> String {
    let terms: Vec<String> = f
        .factors
        .iter()
        .map(|(p, &e)| {
            if e == 1 {
                p.to_string()
            } else {
                format!("{p}^{e}")
            }
        })
        .collect();
    format!("{} = {}", f.n, terms.join(" * "))
}

fn run_hypothesis(a: &HypothesisArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    if a.n < 3 || a.n > BRUTE_FORCE_LIMIT {
        return Err(Failure::Usage(format!(
            "hypothesis needs 3 <= n <= {BRUTE_FORCE_LIMIT}, got {}",
            a.n
        )));
    }
    check_base(&BigUint::from(a.n), &BigUint::from(a.g))?;
    if a.extra.is_empty() || a.extra.contains(&0) {
        return Err(Failure::Usage("every value of c must be positive".into()));
    }
    let template = DriverConfig {
        bound_override: a.bound,
        include_unit: a.include_unit,
        ..DriverConfig::default()
    };
    writeln!(out, "{}", HypothesisTrialResult::CSV_HEADER)?;
    for &c in &a.extra {
        let start = Instant::now();
        let r = estimate_success_rate(a.n, a.g, c, a.trials as usize, a.seed, &template)
            .map_err(|error| Failure::Algorithm { error, json: false })?;
        writeln!(
            err,
            "c = {c}: hit rate {:.3} against 1/zeta(c+1) = {:.3} ({:.1}s)",
            r.hit_rate(),
            r.predicted,
            start.elapsed().as_secs_f64()
        )?;
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(EXIT_OK)
}

fn run_bench(a: &BenchArgs, out: &mut dyn Write) -> CmdResult {
    if let Some(n) = a.n.iter().find(|n| *n < &BigUint::from(3u32) || !n.bit(0)) {
        return Err(Failure::Usage(format!(
            "bench needs odd moduli n >= 3, got {n}"
        )));
    }
    if let Some(b) = a.bound.iter().find(|&&b| b < 3) {
        return Err(Failure::Usage(format!(
            "bounds must be at least 3, got {b}"
        )));
    }
    let config = DriverConfig {
        extra_relations: a.extra as usize,
        seed: a.seed,
        attempt_budget: a.max_attempts,
        ..DriverConfig::default()
    };
    let rows = benchmark_phases(&a.n, &a.bound, &config, a.repeats);
    write!(out, "{}", bench_csv(&rows))?;
    Ok(EXIT_OK)
}

fn run_fixture(a: &FixtureArgs, out: &mut dyn Write) -> CmdResult {
    let fx = match &a.fixture_path {
        Some(path) => Fixture::load(path)
            .map_err(|e| Failure::Usage(format!("cannot load {}: {e}", path.display())))?,
        None => Fixture::bundled(),
    };
    let report = verify_fixture(&fx).map_err(|error| Failure::Algorithm {
        error,
        json: a.output.json,
    })?;
    if a.output.json {
        writeln!(out, "{}", pretty(&report))?;
    } else {
        writeln!(out, "{report}")?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILURE })
}
