//! `multipoint`: single solves, table reproduction and order verification.

pub mod config;
pub mod render;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use multipoint_core::bigreal::{format_scientific, BigReal, PrecisionContext};
use multipoint_core::diagnostics::{classify, efficiency_index};
use multipoint_core::funcsuite::{builtin_function, builtin_suite, refine_root, TestFunction};
use multipoint_core::orderlab::{
    family_scheme, method_scheme, verify_order, ConditionSet, Family, DEFAULT_TRUNCATION,
};
use multipoint_core::schemes::{
    builtin_method, iterate, parse_rational, MethodKind, Params, RunStatus, BUILTIN_METHODS,
};
use multipoint_core::tables::{run_table, table_spec, TableSpec};

use config::{BenchConfig, ConfigError, Format};
use render::{compare_records, parse_records, render_table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_DIVERGENT: i32 = 2;
pub const EXIT_ERROR: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "multipoint",
    version,
    about = "High-order multipoint root finding at arbitrary precision"
)]
struct Cli {
    /// Flat `key = value` settings file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one method on one function and print the iterates.
    Solve(SolveArgs),
    /// Reproduce a comparison table.
    Bench(BenchArgs),
    /// Certify a convergence order with exact series arithmetic.
    VerifyOrder(VerifyArgs),
    /// Show the registered methods or test functions.
    List(ListArgs),
}

#[derive(Debug, Args)]
struct Precision {
    /// Working precision in bits.
    #[arg(long)]
    bits: Option<u32>,
    /// Total number of function evaluations.
    #[arg(long)]
    tnfe: Option<u32>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Method spec, e.g. `FD5` or `SG(a=-1)`.
    #[arg(long)]
    method: String,
    /// Built-in test function id.
    #[arg(long, conflicts_with = "expr", required_unless_present = "expr")]
    function: Option<String>,
    /// Expression in `x`, e.g. `x^3 - 2`.
    #[arg(long)]
    expr: Option<String>,
    /// Starting point; defaults to the function's table seed.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Offset parameter of a derivative-free method.
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<String>,
    #[command(flatten)]
    precision: Precision,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Table number, 2 to 7.
    #[arg(long)]
    table: u8,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare against a records file and fail on differences.
    #[arg(long, value_name = "RECORDS")]
    check: Option<PathBuf>,
    /// Comma-separated column labels to keep.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated function ids to keep.
    #[arg(long)]
    functions: Option<String>,
    #[command(flatten)]
    precision: Precision,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, required_unless_present = "method")]
    family: Option<String>,
    #[arg(long, default_value = "base")]
    conditions: String,
    /// Verify a registered method instead of a family.
    #[arg(long, conflicts_with = "family")]
    method: Option<String>,
    /// Highest power of e kept in the series.
    #[arg(long, default_value_t = DEFAULT_TRUNCATION)]
    truncation: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Listing {
    Methods,
    Functions,
}

#[derive(Debug, Args)]
struct ListArgs {
    what: Listing,
    /// Keep entries whose name contains this.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    bits: Option<u32>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_ERROR,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn context(bits: u32) -> Result<PrecisionContext, CliError> {
    PrecisionContext::new(bits).map_err(usage)
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "multipoint: {e}");
            e.code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut cfg = BenchConfig::from_env()?;
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    match cli.command {
        Command::Solve(a) => solve(a, cfg, out),
        Command::Bench(a) => bench(a, cfg, out),
        Command::VerifyOrder(a) => verify(a, out),
        Command::List(a) => list(a, cfg, out),
    }
}

fn apply_precision(p: &Precision, cfg: &mut BenchConfig) {
    if let Some(b) = p.bits {
        cfg.bits = b;
    }
    if let Some(t) = p.tnfe {
        cfg.tnfe = t;
    }
}

fn solve(a: SolveArgs, mut cfg: BenchConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    apply_precision(&a.precision, &mut cfg);
    let ctx = context(cfg.bits)?;
    let mut method = builtin_method(&a.method).map_err(usage)?;
    if let Some(k) = &a.kappa {
        let Some(key) = method.offset.clone() else {
            return Err(usage(format!(
                "{} is derivative-based and has no offset",
                method.name
            )));
        };
        let q = parse_rational(k).ok_or_else(|| usage(format!("cannot read kappa {k:?}")))?;
        method = method.with_param(&key, q).map_err(usage)?;
    }
    method.validate().map_err(usage)?;

    let (f, label) = match (&a.function, &a.expr) {
        (Some(id), _) => {
            let f = builtin_function(id, ctx)
                .map_err(|e| CliError::Io(e.to_string()))?
                .ok_or_else(|| usage(format!("unknown function {id:?}")))?;
            let label = format!("{id} = {}", f.source());
            (f, label)
        }
        (None, Some(src)) => {
            let f = TestFunction::from_source("expr", src).map_err(usage)?;
            (f, src.clone())
        }
        (None, None) => return Err(usage("need --function or --expr")),
    };
    let x0 = match (&a.x0, f.default_x0()) {
        (Some(s), _) => ctx.parse(s).map_err(usage)?,
        (None, Some(x)) => x.clone(),
        (None, None) => return Err(usage("--x0 is required with --expr")),
    };

    let trace = iterate(&method, &f, &x0, cfg.tnfe);
    let alpha: Option<BigReal> = match f.reference_root() {
        Some(r) => Some(r.clone()),
        None => trace
            .last()
            .filter(|x| x.is_finite())
            .and_then(|x| refine_root(&f, x, ctx.decimal_digits()).ok()),
    };

    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(io_err);
    w(out, format!("method: {}", method.name))?;
    w(out, format!("function: {label}"))?;
    w(out, format!("bits: {}  tnfe: {}", cfg.bits, cfg.tnfe))?;
    for (i, (x, fx)) in trace.iterates.iter().zip(&trace.residuals).enumerate() {
        w(
            out,
            format!(
                "x{i} = {}  f = {}",
                format_scientific(x, 40),
                format_scientific(fx, 3)
            ),
        )?;
    }
    if trace.residuals.len() < trace.iterates.len() {
        if let Some(x) = trace.last() {
            w(
                out,
                format!(
                    "x{} = {}",
                    trace.iterates.len() - 1,
                    format_scientific(x, 40)
                ),
            )?;
        }
    }
    match &alpha {
        Some(alpha) => {
            let report = classify(&trace, alpha);
            if let Some(x) = trace.last() {
                w(out, format!("root: {}", format_scientific(x, 40)))?;
            }
            let err = report
                .final_abs_error
                .as_ref()
                .map_or("-".to_string(), |e| format_scientific(e, 3));
            w(
                out,
                format!("error: {err}  exponent: {}", report.error_cell()),
            )?;
            w(out, format!("coc: {}", report.coc_cell()))?;
            w(out, format!("class: {}", report.class))?;
        }
        None => w(out, "error: - (no root to compare against)".into())?,
    }
    w(
        out,
        format!("status: {}  evals: {}", trace.status, trace.tnfe_used),
    )?;
    if let Some(note) = &trace.note {
        w(out, format!("note: {note}"))?;
    }
    Ok(match trace.status {
        RunStatus::Converged | RunStatus::BudgetExhausted => EXIT_OK,
        RunStatus::Divergent => EXIT_DIVERGENT,
        RunStatus::DegenerateStep | RunStatus::DomainError => EXIT_ERROR,
    })
}

fn restrict(spec: &mut TableSpec, cfg: &BenchConfig) -> Result<(), CliError> {
    for m in &cfg.methods {
        if !spec.columns.iter().any(|c| c.label == m || c.method == m) {
            return Err(usage(format!("table {} has no column {m:?}", spec.id)));
        }
    }
    for f in &cfg.functions {
        if !spec.rows.iter().any(|r| r.function == f) {
            return Err(usage(format!("table {} has no row {f:?}", spec.id)));
        }
    }
    if !cfg.methods.is_empty() {
        spec.columns
            .retain(|c| cfg.methods.iter().any(|m| c.label == m || c.method == m));
    }
    if !cfg.functions.is_empty() {
        spec.rows
            .retain(|r| cfg.functions.iter().any(|f| r.function == f));
    }
    Ok(())
}

fn bench(a: BenchArgs, mut cfg: BenchConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    apply_precision(&a.precision, &mut cfg);
    if let Some(f) = a.format {
        cfg.format = f;
    }
    if let Some(m) = &a.methods {
        cfg.set("methods", m)?;
    }
    if let Some(f) = &a.functions {
        cfg.set("functions", f)?;
    }
    let ctx = context(cfg.bits)?;
    let mut spec = table_spec(a.table).map_err(usage)?;
    restrict(&mut spec, &cfg)?;
    let expected = match &a.check {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Some(parse_records(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };

    let table = run_table(&spec, ctx, cfg.tnfe).map_err(|e| CliError::Io(e.to_string()))?;
    let report = render_table(&table, cfg.format);
    match &a.out {
        Some(path) => fs::write(path, &report)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => out.write_all(report.as_bytes()).map_err(io_err)?,
    }
    let Some(expected) = expected else {
        return Ok(EXIT_OK);
    };
    let actual = parse_records(&render_table(&table, Format::Records)).map_err(CliError::Io)?;
    let problems = compare_records(&expected, &actual, cfg.exponent_slack, cfg.coc_slack);
    for p in &problems {
        writeln!(out, "mismatch: {p}").map_err(io_err)?;
    }
    writeln!(
        out,
        "check: {} of {} cells match",
        expected
            .len()
            .saturating_sub(problems.len())
            .min(actual.len()),
        expected.len()
    )
    .map_err(io_err)?;
    Ok(if problems.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let scheme = match (&a.method, &a.family) {
        (Some(name), _) => method_scheme(&builtin_method(name).map_err(usage)?),
        (None, Some(fam)) => {
            let family: Family = fam.parse().map_err(usage)?;
            let set: ConditionSet = a.conditions.parse().map_err(usage)?;
            if !family.condition_sets().contains(&set) {
                return Err(usage(format!(
                    "{family} has no condition set {set}; choose from {}",
                    family
                        .condition_sets()
                        .iter()
                        .map(|s| s.name())
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
            family_scheme(family, set).map_err(usage)?
        }
        (None, None) => return Err(usage("need --family or --method")),
    };
    if a.truncation < 2 {
        return Err(usage("truncation must be at least 2"));
    }
    match verify_order(&scheme, a.truncation) {
        Ok(cert) => {
            writeln!(out, "{cert}").map_err(io_err)?;
            Ok(if cert.certified() {
                EXIT_OK
            } else {
                EXIT_FAILED
            })
        }
        Err(e) => {
            writeln!(out, "scheme: {}", scheme.label).map_err(io_err)?;
            writeln!(out, "claimed order: {}", scheme.claimed_order).map_err(io_err)?;
            writeln!(out, "status: FAILED ({e})").map_err(io_err)?;
            Ok(EXIT_FAILED)
        }
    }
}

fn params_text(params: &Params) -> String {
    if params.is_empty() {
        return "-".into();
    }
    params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn list(a: ListArgs, mut cfg: BenchConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    if let Some(b) = a.bits {
        cfg.bits = b;
    }
    let keep = |name: &str| a.filter.as_deref().map_or(true, |f| name.contains(f));
    let mut lines = Vec::new();
    match a.what {
        Listing::Methods => {
            let ctx = context(64)?;
            lines.push(format!(
                "{:<8} {:<17} {:>2} {:>2} {:>7}  params",
                "name", "kind", "p", "d", "E"
            ));
            for name in BUILTIN_METHODS.iter().filter(|n| keep(n)) {
                let m = builtin_method(name).map_err(|e| CliError::Io(e.to_string()))?;
                let e = efficiency_index(m.claimed_order, m.evals_per_iteration, ctx).to_f64();
                let kind = match m.kind {
                    MethodKind::DerivativeBased => "derivative-based",
                    MethodKind::DerivativeFree => "derivative-free",
                };
                lines.push(format!(
                    "{:<8} {:<17} {:>2} {:>2} {:>7.4}  {}",
                    m.name,
                    kind,
                    m.claimed_order,
                    m.evals_per_iteration,
                    e,
                    params_text(&m.params)
                ));
            }
        }
        Listing::Functions => {
            let ctx = context(cfg.bits)?;
            let suite = builtin_suite(ctx).map_err(|e| CliError::Io(e.to_string()))?;
            let shown: Vec<&TestFunction> = suite.iter().filter(|f| keep(f.id())).collect();
            let w = shown
                .iter()
                .map(|f| f.source().len())
                .max()
                .unwrap_or(4)
                .max(4);
            lines.push(format!("{:<4} {:<w$} {:>5}  root", "id", "f(x)", "x0"));
            for f in shown {
                let x0 = f.default_x0().map_or("-".to_string(), seed_text);
                let root = f
                    .reference_root()
                    .map_or("-".to_string(), |r| format_scientific(r, 30));
                lines.push(format!(
                    "{:<4} {:<w$} {:>5}  {root}",
                    f.id(),
                    f.source(),
                    x0
                ));
            }
        }
    }
    for l in lines {
        writeln!(out, "{l}").map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

/// Short decimal form for a table seed.
fn seed_text(x: &BigReal) -> String {
    let v = x.to_f64();
    let s = format!("{v}");
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}
