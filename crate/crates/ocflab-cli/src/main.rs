//! Command-line laboratory for odd continued fractions: exact expansion
//! and classification, matrix-word factorization, catalogue enumeration
//! with deterministic partitioning and checkpoints, set counting with
//! closed-form main terms, verification suites, and distribution reports.
//!
//! Exit codes: `2` for input-grammar errors, `3` for precondition
//! violations, `4` for exhausted oracle budgets (`OCFLAB_BUDGET_MS`),
//! `1` for failed verification suites; diagnostics go to stderr as JSON.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use ocflab::analytic::{self, MeasureId, TotientVariant, GOLDEN, LOG_G};
use ocflab::enumerate::{self, EnumError, EnumParams, QiRecord, RecordRow};
use ocflab::equidist::{self, CorollaryReport, Grid2D, WindowReport};
use ocflab::{cf, matword};
use ocflab::{Digit, Mat2, Value};
use serde_json::json;

// ---------------------------------------------------------------------------
// failure classification and exit codes
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum FailureKind {
    Parse,
    Precondition,
    Budget,
    Runtime,
    Suite,
}

#[derive(Debug)]
struct Failure {
    kind: FailureKind,
    message: String,
}

impl Failure {
    fn parse(msg: impl ToString) -> Failure {
        Failure { kind: FailureKind::Parse, message: msg.to_string() }
    }

    fn precondition(msg: impl ToString) -> Failure {
        Failure { kind: FailureKind::Precondition, message: msg.to_string() }
    }

    fn budget(msg: impl ToString) -> Failure {
        Failure { kind: FailureKind::Budget, message: msg.to_string() }
    }

    fn runtime(msg: impl ToString) -> Failure {
        Failure { kind: FailureKind::Runtime, message: msg.to_string() }
    }

    fn suite(msg: impl ToString) -> Failure {
        Failure { kind: FailureKind::Suite, message: msg.to_string() }
    }

    fn code(&self) -> u8 {
        match self.kind {
            FailureKind::Parse => 2,
            FailureKind::Precondition => 3,
            FailureKind::Budget => 4,
            FailureKind::Runtime | FailureKind::Suite => 1,
        }
    }

    fn kind_str(&self) -> &'static str {
        match self.kind {
            FailureKind::Parse => "parse",
            FailureKind::Precondition => "precondition",
            FailureKind::Budget => "budget",
            FailureKind::Runtime => "runtime",
            FailureKind::Suite => "suite",
        }
    }
}

fn from_enum(e: EnumError) -> Failure {
    match e {
        EnumError::BudgetExceeded(_) => Failure::budget(e),
        EnumError::BadParams(_) => Failure::precondition(e),
        other => Failure::runtime(other),
    }
}

// ---------------------------------------------------------------------------
// argument grammar
// ---------------------------------------------------------------------------

/// Exact laboratory for odd continued fractions.
#[derive(Parser)]
#[command(name = "ocflab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a quadratic value in one of the digit systems
    Expand(ExpandArgs),
    /// Report the reduction classes of a quadratic value > 1
    Classify(ClassifyArgs),
    /// Factor a nonnegative-pattern matrix into digit blocks
    Factor(FactorArgs),
    /// Write the catalogue of purely periodic values at a trace bound
    Enumerate(EnumerateArgs),
    /// Count matrix, word, and lattice sets, optionally with main terms
    Count(CountArgs),
    /// Run a verification suite (nonzero exit on failure)
    Verify(VerifyArgs),
    /// Distribution reports against the limiting measures
    Equidist(EquidistArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CfKind {
    Ocf,
    Rcf,
    Grotesque,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Tsv,
}

#[derive(Args)]
struct ExpandArgs {
    /// Digit system
    #[arg(long = "cf", value_enum, default_value_t = CfKind::Ocf)]
    cf: CfKind,
    /// Value in the grammar "(p+r*sqrt(d))/q" (also "p/q" or "p")
    #[arg(long)]
    value: String,
    /// Maximum digit steps before giving up on periodicity
    #[arg(long = "max-steps", default_value_t = 512)]
    max_steps: usize,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Value in the grammar "(p+r*sqrt(d))/q"
    #[arg(long)]
    value: String,
}

#[derive(Args)]
struct FactorArgs {
    /// Matrix in the grammar "[[a,b],[c,d]]"
    #[arg(long)]
    matrix: String,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Trace bound
    #[arg(long = "N")]
    n: Option<u64>,
    /// Radius bound; the trace bound is floor(exp(R/2))
    #[arg(long = "R")]
    radius: Option<f64>,
    /// Lower bound on the value (exact: "p/q", "G", "g", "G+1", "G-1")
    #[arg(long, default_value = "1")]
    alpha: String,
    /// Conjugate window parameter (omega* <= 1/beta1)
    #[arg(long, default_value = "G+1")]
    beta1: String,
    /// Conjugate window parameter (omega* >= -1/beta2)
    #[arg(long = "beta2", default_value = "G-1")]
    beta2: String,
    /// Worker threads over the disjoint first-digit subtrees
    #[arg(long, default_value_t = 1)]
    partitions: usize,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Resumable checkpoint file keyed by first-digit subtree
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SetKind {
    /// Sign +1 matrix set
    #[value(name = "S+1")]
    SPlus,
    /// Sign -1 matrix set
    #[value(name = "S-1")]
    SMinus,
    /// Words with trace bound (all powers of primitive periods)
    #[value(name = "W")]
    W,
    /// Lattice-triple class with even z
    #[value(name = "A1")]
    A1,
    /// Lattice-triple class with z, y odd
    #[value(name = "A2")]
    A2,
    /// Lattice-triple class with z, x odd
    #[value(name = "A3")]
    A3,
    /// Error set of the reverse reduction, r in {1,2}
    #[value(name = "ANr")]
    ANr,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    #[value(name = "+1")]
    Plus,
    #[value(name = "-1")]
    Minus,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long, value_enum)]
    set: SetKind,
    #[arg(long = "N")]
    n: Option<u64>,
    #[arg(long = "R")]
    radius: Option<f64>,
    /// Exact window parameter (defaults to 1)
    #[arg(long)]
    alpha: Option<String>,
    /// Column-ratio bound for the S sets (defaults: 1 for S+1, G+1 for S-1)
    #[arg(long)]
    beta: Option<String>,
    /// Window parameter for W (defaults to G+1)
    #[arg(long)]
    beta1: Option<String>,
    /// Window parameter for W (defaults to G-1)
    #[arg(long = "beta2")]
    beta2: Option<String>,
    /// Include the closed-form main term and residual
    #[arg(long = "with-main-term")]
    with_main_term: bool,
    /// Error-set index for --set ANr
    #[arg(long, default_value_t = 1)]
    r: u8,
    /// Entry cap K for --set ANr (exact grammar)
    #[arg(long, default_value = "G")]
    cap: String,
    /// Sign for the lattice classes A1/A2/A3
    #[arg(long, value_enum, default_value = "+1", allow_hyphen_values = true)]
    sign: SignArg,
    /// Use the brute-force divisor scan instead of the lattice count
    #[arg(long)]
    brute: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteKind {
    Roundtrip,
    Appendix3,
    Bijection,
    ReductionChain,
    Kloosterman,
    Totient,
    Measures,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: SuiteKind,
    /// Scale parameter (suite-specific default)
    #[arg(long = "N")]
    n: Option<u64>,
    /// Seed for the random corpora
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Corpus size for the word suites
    #[arg(long, default_value_t = 1000)]
    cases: usize,
    /// Expansion step limit in the roundtrip suite
    #[arg(long = "max-steps", default_value_t = 512)]
    max_steps: usize,
}

#[derive(Args)]
struct EquidistArgs {
    #[arg(long = "N")]
    n: Option<u64>,
    #[arg(long = "R")]
    radius: Option<f64>,
    /// Tail threshold: also report the count ratio for omega >= alpha
    #[arg(long)]
    alpha: Option<String>,
    /// With --alpha and --beta2: also report the window frequency
    #[arg(long)]
    beta1: Option<String>,
    #[arg(long = "beta2")]
    beta2: Option<String>,
    #[arg(long, default_value_t = 1)]
    partitions: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prefix for gnuplot-ready marginal dumps (<prefix>.x.dat, .y.dat)
    #[arg(long)]
    marginals: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// shared parsing helpers
// ---------------------------------------------------------------------------

/// Exact window parameters: the tokens `G`, `g`, `G+1`, `G-1`, integers,
/// rationals `p/q`, or the full value grammar.
fn parse_exact(text: &str) -> Result<Value, Failure> {
    let t = text.trim();
    let golden = Value::golden();
    let one = Value::integer(1);
    match t {
        "G" => return Ok(golden),
        "g" | "G-1" => return golden.sub(&one).map_err(Failure::parse),
        "G+1" => return golden.add(&one).map_err(Failure::parse),
        _ => {}
    }
    if t.contains("sqrt") || t.starts_with('(') {
        return Value::parse(t).map_err(Failure::parse);
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|e| Failure::parse(format!("bad numerator: {e}")))?;
        let q: i64 = q.trim().parse().map_err(|e| Failure::parse(format!("bad denominator: {e}")))?;
        return Value::rational(p, q).map_err(Failure::parse);
    }
    let k: i64 = t.parse().map_err(|_| Failure::parse(format!("cannot parse parameter {t:?}")))?;
    Ok(Value::integer(k))
}

fn parse_quadratic(text: &str) -> Result<ocflab::Qi, Failure> {
    match Value::parse(text).map_err(Failure::parse)? {
        Value::Quadratic(x) => Ok(x),
        Value::Rational(_) => Err(Failure::precondition(
            "this command needs a quadratic irrational, got a rational value",
        )),
    }
}

fn resolve_n(n: Option<u64>, radius: Option<f64>) -> Result<u64, Failure> {
    match (n, radius) {
        (Some(n), None) => Ok(n),
        (None, Some(r)) if r.is_finite() && r >= 0.0 => Ok((r / 2.0).exp().floor() as u64),
        (None, Some(r)) => Err(Failure::precondition(format!("invalid radius {r}"))),
        (Some(_), Some(_)) => Err(Failure::precondition("give either --N or --R, not both")),
        (None, None) => Err(Failure::precondition("one of --N or --R is required")),
    }
}

fn budget_from_env() -> Result<Option<Duration>, Failure> {
    match std::env::var("OCFLAB_BUDGET_MS") {
        Ok(text) => {
            let ms: u64 = text
                .trim()
                .parse()
                .map_err(|_| Failure::precondition(format!("bad OCFLAB_BUDGET_MS value {text:?}")))?;
            Ok(Some(Duration::from_millis(ms)))
        }
        Err(_) => Ok(None),
    }
}

fn digits_text(digits: &[Digit]) -> String {
    digits.iter().map(|d| d.to_string()).collect()
}

fn emit_json(value: &serde_json::Value, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Failure::runtime)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(Failure::runtime),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render_rows<T: serde::Serialize>(rows: &[T], format: Format) -> Result<Vec<u8>, Failure> {
    match format {
        Format::Json => {
            let mut bytes = serde_json::to_vec_pretty(rows).map_err(Failure::runtime)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv | Format::Tsv => {
            let delim = if format == Format::Csv { b',' } else { b'\t' };
            let mut wtr = csv::WriterBuilder::new().delimiter(delim).from_writer(Vec::new());
            for row in rows {
                wtr.serialize(row).map_err(Failure::runtime)?;
            }
            wtr.into_inner().map_err(Failure::runtime)
        }
    }
}

fn write_bytes(bytes: &[u8], out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(Failure::runtime),
        None => std::io::stdout().write_all(bytes).map_err(Failure::runtime),
    }
}

// ---------------------------------------------------------------------------
// expand / classify / factor
// ---------------------------------------------------------------------------

fn run_expand(args: &ExpandArgs) -> Result<(), Failure> {
    let x = parse_quadratic(&args.value)?;
    let (name, result) = match args.cf {
        CfKind::Ocf => ("ocf", cf::ocf_expand(&x, args.max_steps)),
        CfKind::Rcf => ("rcf", cf::rcf_expand(&x, args.max_steps)),
        CfKind::Grotesque => ("grotesque", cf::grotesque_expand(&x, args.max_steps)),
    };
    let expansion = result.map_err(Failure::precondition)?;
    emit_json(
        &json!({
            "value": x.to_string(),
            "value_float": x.to_f64(),
            "cf": name,
            "preperiod": digits_text(&expansion.preperiod),
            "period": digits_text(&expansion.period),
            "period_length": expansion.period.len(),
            "purely_periodic": expansion.purely_periodic,
        }),
        None,
    )
}

fn run_classify(args: &ClassifyArgs) -> Result<(), Failure> {
    let x = parse_quadratic(&args.value)?;
    let classes = cf::classify_reduced(&x).map_err(Failure::precondition)?;
    emit_json(
        &json!({
            "value": x.to_string(),
            "value_float": x.to_f64(),
            "conjugate_float": x.conj().to_f64(),
            "R": classes.r,
            "E": classes.e,
            "O": classes.o,
            "B": classes.b,
        }),
        None,
    )
}

fn run_factor(args: &FactorArgs) -> Result<(), Failure> {
    let m = Mat2::parse(&args.matrix).map_err(Failure::parse)?;
    let blocks = matword::factor_matrix(&m).map_err(Failure::precondition)?;
    let mut words = serde_json::Map::new();
    for sign in [1i8, -1] {
        if let Ok(word) = matword::blocks_to_word(&blocks, sign) {
            words.insert(format!("{sign:+}"), json!(word.to_string()));
        }
    }
    emit_json(
        &json!({
            "matrix": m.to_string(),
            "blocks": blocks,
            "words": words,
        }),
        None,
    )
}

// ---------------------------------------------------------------------------
// enumerate
// ---------------------------------------------------------------------------

fn checkpoint_fingerprint(params: &EnumParams) -> String {
    format!(
        "ocflab-checkpoint v1 N={} alpha={} beta1={} beta2={}",
        params.n, params.alpha, params.beta1, params.beta2
    )
}

/// Runs the enumeration subtree by subtree, caching each finished subtree in
/// the checkpoint file so an interrupted run resumes where it stopped.
fn enumerate_with_checkpoint(params: &EnumParams, path: &Path) -> Result<Vec<RecordRow>, Failure> {
    let fingerprint = checkpoint_fingerprint(params);
    let roots = enumerate::root_digits(params.n);
    let mut cached: Vec<Option<Vec<RecordRow>>> = vec![None; roots.len()];
    let existing = fs::read_to_string(path).unwrap_or_default();
    let mut fresh = true;
    if !existing.is_empty() {
        let mut lines = existing.lines();
        if lines.next() != Some(fingerprint.as_str()) {
            return Err(Failure::precondition(format!(
                "checkpoint {} belongs to different parameters",
                path.display()
            )));
        }
        fresh = false;
        // read finished blocks; stop silently at the first malformed block
        // (an interrupted append)
        'blocks: while let Some(head) = lines.next() {
            let mut parts = head.split_whitespace();
            let (tag, idx, count) = (parts.next(), parts.next(), parts.next());
            let (Some("root"), Some(idx), Some(count)) = (tag, idx, count) else { break };
            let (Ok(idx), Ok(count)) = (idx.parse::<usize>(), count.parse::<usize>()) else { break };
            if idx >= roots.len() {
                break;
            }
            let mut rows = Vec::with_capacity(count);
            for _ in 0..count {
                let Some(line) = lines.next() else { break 'blocks };
                let Ok(row) = serde_json::from_str::<RecordRow>(line) else { break 'blocks };
                rows.push(row);
            }
            cached[idx] = Some(rows);
        }
    }
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(Failure::runtime)?;
    if fresh {
        writeln!(file, "{fingerprint}").map_err(Failure::runtime)?;
    }
    let mut out = Vec::new();
    for (idx, root) in roots.iter().enumerate() {
        let rows = match cached[idx].take() {
            Some(rows) => {
                eprintln!("enumerate: subtree {}/{} from checkpoint ({} records)", idx + 1, roots.len(), rows.len());
                rows
            }
            None => {
                let recs = enumerate::enumerate_subtree(params, *root).map_err(from_enum)?;
                let rows: Vec<RecordRow> = recs.iter().map(QiRecord::schema_row).collect();
                let mut block = format!("root {} {}\n", idx, rows.len());
                for row in &rows {
                    block.push_str(&serde_json::to_string(row).map_err(Failure::runtime)?);
                    block.push('\n');
                }
                file.write_all(block.as_bytes()).map_err(Failure::runtime)?;
                file.flush().map_err(Failure::runtime)?;
                eprintln!("enumerate: subtree {}/{} done ({} records)", idx + 1, roots.len(), rows.len());
                rows
            }
        };
        out.extend(rows);
    }
    Ok(out)
}

fn enumerate_rows(params: &EnumParams, partitions: usize, checkpoint: Option<&Path>) -> Result<Vec<RecordRow>, Failure> {
    if let Some(path) = checkpoint {
        return enumerate_with_checkpoint(params, path);
    }
    let verbose = params.n >= 20_000;
    if partitions <= 1 && verbose {
        // run subtree by subtree for progress reporting
        let roots = enumerate::root_digits(params.n);
        let mut rows = Vec::new();
        for (idx, root) in roots.iter().enumerate() {
            let recs = enumerate::enumerate_subtree(params, *root).map_err(from_enum)?;
            rows.extend(recs.iter().map(QiRecord::schema_row));
            if (idx + 1) % 8 == 0 || idx + 1 == roots.len() {
                eprintln!("enumerate: subtree {}/{} done ({} records so far)", idx + 1, roots.len(), rows.len());
            }
        }
        return Ok(rows);
    }
    if verbose {
        eprintln!("enumerate: trace bound {} on {} partitions", params.n, partitions);
    }
    let recs = enumerate::enumerate_partitioned(params, partitions).map_err(from_enum)?;
    if verbose {
        eprintln!("enumerate: {} records", recs.len());
    }
    Ok(recs.iter().map(QiRecord::schema_row).collect())
}

fn run_enumerate(args: &EnumerateArgs) -> Result<(), Failure> {
    let n = resolve_n(args.n, args.radius)?;
    let params = EnumParams::new(
        n,
        parse_exact(&args.alpha)?,
        parse_exact(&args.beta1)?,
        parse_exact(&args.beta2)?,
    )
    .map_err(from_enum)?;
    let rows = enumerate_rows(&params, args.partitions, args.checkpoint.as_deref())?;
    let bytes = render_rows(&rows, args.format)?;
    write_bytes(&bytes, args.out.as_deref())
}

// ---------------------------------------------------------------------------
// count
// ---------------------------------------------------------------------------

fn run_count(args: &CountArgs) -> Result<(), Failure> {
    let n = resolve_n(args.n, args.radius)?;
    let budget = budget_from_env()?;
    let alpha = parse_exact(args.alpha.as_deref().unwrap_or("1"))?;
    let report = match args.set {
        SetKind::SPlus | SetKind::SMinus => {
            let (e, selector, default_beta) = match args.set {
                SetKind::SPlus => (1i8, "S+1", "1"),
                _ => (-1i8, "S-1", "G+1"),
            };
            let beta = parse_exact(args.beta.as_deref().unwrap_or(default_beta))?;
            let (count, parts) = if args.brute {
                (enumerate::count_s_brute(e, &alpha, &beta, n, budget).map_err(from_enum)?, None)
            } else {
                let t = enumerate::count_s_triples(e, &alpha, &beta, n).map_err(from_enum)?;
                (t.total, Some(t))
            };
            let mut obj = json!({
                "set": selector,
                "N": n,
                "alpha": alpha.to_string(),
                "beta": beta.to_string(),
                "count": count,
                "method": if args.brute { "divisor-scan" } else { "lattice-triples" },
            });
            if let Some(t) = parts {
                obj["parts"] = json!({
                    "a1": t.a1, "a2": t.a2, "a3": t.a3, "exceptional": t.exceptional,
                });
            }
            if args.with_main_term {
                let (b1, b2) = (beta.to_f64(), beta.to_f64());
                let main = analytic::main_term(selector, alpha.to_f64(), b1, b2, n as f64)
                    .map_err(Failure::precondition)?;
                obj["main_term"] = json!(main);
                obj["residual"] = json!(count as f64 - main);
                obj["normalized_residual"] = json!((count as f64 - main) / (n as f64).powf(1.5));
            }
            obj
        }
        SetKind::A1 | SetKind::A2 | SetKind::A3 => {
            let e = match args.sign {
                SignArg::Plus => 1i8,
                SignArg::Minus => -1,
            };
            let default_beta = if e == 1 { "1" } else { "G+1" };
            let beta = parse_exact(args.beta.as_deref().unwrap_or(default_beta))?;
            let t = enumerate::count_s_triples(e, &alpha, &beta, n).map_err(from_enum)?;
            let (name, count) = match args.set {
                SetKind::A1 => ("A1", t.a1),
                SetKind::A2 => ("A2", t.a2),
                _ => ("A3", t.a3),
            };
            json!({
                "set": name,
                "sign": e,
                "N": n,
                "alpha": alpha.to_string(),
                "beta": beta.to_string(),
                "count": count,
                "parts": { "a1": t.a1, "a2": t.a2, "a3": t.a3, "exceptional": t.exceptional },
                "total": t.total,
            })
        }
        SetKind::W => {
            let beta1 = parse_exact(args.beta1.as_deref().unwrap_or("G+1"))?;
            let beta2 = parse_exact(args.beta2.as_deref().unwrap_or("G-1"))?;
            let params = EnumParams::new(n, alpha.clone(), beta1.clone(), beta2.clone())
                .map_err(from_enum)?;
            let counts = enumerate::count_words_w(&params).map_err(from_enum)?;
            let mut obj = json!({
                "set": "W",
                "N": n,
                "alpha": alpha.to_string(),
                "beta1": beta1.to_string(),
                "beta2": beta2.to_string(),
                "count": counts.total,
                "minus": counts.minus,
                "plus": counts.plus,
                "remark_sum": counts.remark_sum,
            });
            if args.with_main_term {
                let main = analytic::main_term(
                    "theorem",
                    alpha.to_f64(),
                    beta1.to_f64(),
                    beta2.to_f64(),
                    n as f64,
                )
                .map_err(Failure::precondition)?;
                obj["main_term"] = json!(main);
                obj["residual"] = json!(counts.total as f64 - main);
            }
            obj
        }
        SetKind::ANr => {
            let cap = parse_exact(&args.cap)?;
            let count = enumerate::count_a_nr(args.r, &cap, n, budget).map_err(from_enum)?;
            json!({
                "set": format!("A_N,{}", args.r),
                "N": n,
                "cap": cap.to_string(),
                "count": count,
                "normalized": count as f64 / (n as f64).powf(1.5),
            })
        }
    };
    emit_json(&report, None)
}

// ---------------------------------------------------------------------------
// verify suites
// ---------------------------------------------------------------------------

struct SuiteOutcome {
    cases: u64,
    failures: u64,
    details: serde_json::Value,
}

fn suite_roundtrip(seed: u64, cases: usize, max_steps: usize) -> Result<SuiteOutcome, Failure> {
    let words = cf::random_periods(seed, cases, 8, 15);
    let mut failures = 0u64;
    for w in &words {
        let ok = (|| -> Result<bool, Failure> {
            let omega = cf::evaluate_periodic(w).map_err(Failure::runtime)?;
            let expansion = cf::ocf_expand(&omega, max_steps).map_err(Failure::runtime)?;
            if !expansion.purely_periodic || expansion.period != w.digits() {
                return Ok(false);
            }
            // digit/sign recovery from consecutive convergent numerators
            let ps = cf::convergents(w.digits());
            for k in 1..ps.len() {
                let (a, e_prev) = cf::digits_from_convergents(&ps[k].0, &ps[k - 1].0)
                    .map_err(Failure::runtime)?;
                let want_a = w.digits()[k - 1].a;
                let want_e = if k >= 2 { w.digits()[k - 2].e } else { 1 };
                if a != want_a || e_prev != want_e {
                    return Ok(false);
                }
            }
            // block factorization round-trip on the convergent-pair matrix
            let sigma = matword::sigma_of_word(w);
            let blocks = matword::factor_matrix(&sigma).map_err(Failure::runtime)?;
            if matword::blocks_to_matrix(&blocks) != sigma
                || blocks != matword::word_to_blocks(w)
                || matword::blocks_to_word(&blocks, w.digits().last().expect("nonempty").e)
                    .map_err(Failure::runtime)?
                    != *w
            {
                return Ok(false);
            }
            // dual-route conjugate
            let dual = cf::galois_conjugate(w).map_err(Failure::runtime)?;
            Ok(dual == omega.conj())
        })()?;
        if !ok {
            failures += 1;
        }
    }
    Ok(SuiteOutcome {
        cases: words.len() as u64,
        failures,
        details: json!({"seed": seed, "max_len": 8, "max_digit": 15}),
    })
}

fn suite_appendix3(seed: u64, cases: usize) -> Result<SuiteOutcome, Failure> {
    let words = cf::random_periods(seed, cases, 8, 15);
    let golden = Value::golden();
    let g_small = golden.sub(&Value::integer(1)).expect("exact");
    let g_plus_one = golden.add(&Value::integer(1)).expect("exact");
    let mut failures = 0u64;
    for w in &words {
        let ps = cf::convergents(w.digits());
        let mut ok = true;
        let mut sign = num_sign_product_prefix(w, 0);
        debug_assert_eq!(sign, 1);
        for k in 1..ps.len() {
            let (p, q) = &ps[k];
            let (pp, qp) = &ps[k - 1];
            // p_k >= q_k >= 0, q_k >= 2 from the third convergent on
            if p < q || q < &BigInt::from(0) {
                ok = false;
            }
            if k >= 3 && q < &BigInt::from(2) {
                ok = false;
            }
            // determinant identity p_k q_{k-1} - p_{k-1} q_k = (-1)^k e_1...e_{k-1}
            sign = num_sign_product_prefix(w, k);
            if p * qp - pp * q != BigInt::from(sign) {
                ok = false;
            }
            // ratio bounds: p_k/p_{k-1} > g always, > G+1 when e_k = -1
            let ratio = Value::rational(p.clone(), pp.clone()).map_err(Failure::runtime)?;
            if ratio <= g_small {
                ok = false;
            }
            if w.digits()[k - 1].e == -1 && ratio <= g_plus_one {
                ok = false;
            }
        }
        if !ok {
            failures += 1;
        }
    }
    Ok(SuiteOutcome {
        cases: words.len() as u64,
        failures,
        details: json!({"seed": seed}),
    })
}

/// `(-1)^k e_1 ... e_{k-1}` for the determinant identity.
fn num_sign_product_prefix(w: &ocflab::Word, k: usize) -> i64 {
    let mut s = if k % 2 == 0 { 1i64 } else { -1 };
    for d in &w.digits()[..k.saturating_sub(1)] {
        s *= i64::from(d.e);
    }
    s
}

fn suite_bijection(n: u64, budget: Option<Duration>) -> Result<SuiteOutcome, Failure> {
    let golden = Value::golden();
    let windows = [
        (Value::integer(1), golden.sub(&Value::integer(1)).expect("exact")),
        (Value::integer(1), golden.add(&Value::integer(1)).expect("exact")),
        (Value::rational(3, 2).expect("exact"), Value::integer(2)),
    ];
    let mut rows = Vec::new();
    let mut cases = 0u64;
    let mut failures = 0u64;
    for e in [1i8, -1] {
        for (alpha, beta) in &windows {
            cases += 1;
            let t = enumerate::count_s_triples(e, alpha, beta, n).map_err(from_enum)?;
            let b = enumerate::count_s_brute(e, alpha, beta, n, budget).map_err(from_enum)?;
            if t.total != b {
                failures += 1;
            }
            rows.push(json!({
                "sign": e,
                "alpha": alpha.to_string(),
                "beta": beta.to_string(),
                "triples": t.total,
                "brute": b,
            }));
        }
    }
    Ok(SuiteOutcome { cases, failures, details: json!({"N": n, "windows": rows}) })
}

fn suite_reduction_chain(n: u64, budget: Option<Duration>) -> Result<SuiteOutcome, Failure> {
    let params = EnumParams::unrestricted(n).map_err(from_enum)?;
    let report = enumerate::verify_reduction_chain(&params, budget).map_err(from_enum)?;
    let failures = report.injection_failures + report.reverse_failures;
    Ok(SuiteOutcome {
        cases: report.injection_checked + report.reverse_checked,
        failures,
        details: serde_json::to_value(&report).map_err(Failure::runtime)?,
    })
}

fn suite_kloosterman(n: u64) -> Result<SuiteOutcome, Failure> {
    let q_max = n.clamp(2, 500);
    let mut cases = 0u64;
    let mut failures = 0u64;
    // closed-form oracles
    let k31 = analytic::kloosterman(3, 1, 1, 1).map_err(Failure::precondition)?;
    if (k31.re + 1.0).abs() > 1e-9 || k31.im.abs() > 1e-9 {
        failures += 1;
    }
    let k51 = analytic::kloosterman(5, 1, 1, 1).map_err(Failure::precondition)?;
    if (k51.re - (2.0 + 2.0 * (4.0 * std::f64::consts::PI / 5.0).cos())).abs() > 1e-9 {
        failures += 1;
    }
    cases += 2;
    for q in 2..=q_max {
        let phi = ocflab::arith::phi(q);
        let k00 = analytic::kloosterman(q, 1, 0, 0).map_err(Failure::precondition)?;
        cases += 1;
        if (k00.re - phi as f64).abs() > 1e-6 || k00.im.abs() > 1e-6 {
            failures += 1;
        }
        for h in [1, q - 1] {
            if ocflab::arith::gcd(h, q) != 1 {
                continue;
            }
            for (m, n_arg) in [(1i64, 1i64), (1, 2), (2, 3), (0, 1), (5, 7)] {
                cases += 1;
                if !analytic::weil_check(q, h, m, n_arg).map_err(Failure::precondition)? {
                    failures += 1;
                }
            }
        }
    }
    Ok(SuiteOutcome { cases, failures, details: json!({"q_max": q_max}) })
}

fn suite_totient(n: u64) -> Result<SuiteOutcome, Failure> {
    let mut rows = Vec::new();
    let mut failures = 0u64;
    for variant in TotientVariant::ALL {
        let sum = analytic::totient_sum(variant, n).map_err(Failure::precondition)?;
        let pass = match variant {
            TotientVariant::OddPhiOverM2 => sum.normalized_residual.abs() < 1.0,
            _ => (sum.residual / sum.main_term).abs() < 0.02,
        };
        if !pass {
            failures += 1;
        }
        rows.push(json!({
            "variant": variant.name(),
            "exact": sum.exact_f64,
            "main_term": sum.main_term,
            "residual": sum.residual,
            "normalized_residual": sum.normalized_residual,
            "pass": pass,
        }));
    }
    Ok(SuiteOutcome {
        cases: TotientVariant::ALL.len() as u64,
        failures,
        details: json!({"N": n, "sums": rows}),
    })
}

fn suite_measures() -> Result<SuiteOutcome, Failure> {
    let checks: Vec<(&str, f64, f64)> = vec![
        (
            "mu_o total",
            analytic::measure_mass(MeasureId::MuO, &[1.0]).map_err(Failure::precondition)?,
            1.0,
        ),
        (
            "mu_tilde_o total",
            analytic::measure_mass(MeasureId::MuTildeO, &[1.0, f64::INFINITY, GOLDEN - 2.0, GOLDEN])
                .map_err(Failure::precondition)?,
            1.0,
        ),
        (
            "mu_G total",
            analytic::measure_mass(MeasureId::MuG, &[GOLDEN - 2.0, GOLDEN])
                .map_err(Failure::precondition)?,
            1.0,
        ),
        (
            "mu_o_unit total",
            analytic::measure_mass(MeasureId::MuOUnit, &[0.0, 1.0]).map_err(Failure::precondition)?,
            1.0,
        ),
        (
            "mu_o tail at 2",
            analytic::measure_mass(MeasureId::MuO, &[2.0]).map_err(Failure::precondition)?,
            5f64.sqrt().ln() / (3.0 * LOG_G),
        ),
    ];
    let mut rows = Vec::new();
    let mut failures = 0u64;
    for (name, got, want) in &checks {
        let pass = (got - want).abs() < 1e-9;
        if !pass {
            failures += 1;
        }
        rows.push(json!({"check": name, "value": got, "expected": want, "pass": pass}));
    }
    Ok(SuiteOutcome { cases: checks.len() as u64, failures, details: json!({"checks": rows}) })
}

fn run_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let budget = budget_from_env()?;
    let (name, outcome) = match args.suite {
        SuiteKind::Roundtrip => (
            "roundtrip",
            suite_roundtrip(args.seed, args.cases, args.max_steps)?,
        ),
        SuiteKind::Appendix3 => ("appendix3", suite_appendix3(args.seed, args.cases)?),
        SuiteKind::Bijection => ("bijection", suite_bijection(args.n.unwrap_or(50), budget)?),
        SuiteKind::ReductionChain => (
            "reduction-chain",
            suite_reduction_chain(args.n.unwrap_or(50), budget)?,
        ),
        SuiteKind::Kloosterman => ("kloosterman", suite_kloosterman(args.n.unwrap_or(150))?),
        SuiteKind::Totient => ("totient", suite_totient(args.n.unwrap_or(10_000))?),
        SuiteKind::Measures => ("measures", suite_measures()?),
    };
    let pass = outcome.failures == 0;
    emit_json(
        &json!({
            "suite": name,
            "cases": outcome.cases,
            "failures": outcome.failures,
            "pass": pass,
            "details": outcome.details,
        }),
        None,
    )?;
    if pass {
        Ok(())
    } else {
        Err(Failure::suite(format!(
            "suite {name} failed {} of {} cases",
            outcome.failures, outcome.cases
        )))
    }
}

// ---------------------------------------------------------------------------
// equidist
// ---------------------------------------------------------------------------

fn run_equidist(args: &EquidistArgs) -> Result<(), Failure> {
    let n = resolve_n(args.n, args.radius)?;
    let params = EnumParams::unrestricted(n).map_err(from_enum)?;
    if n >= 20_000 {
        eprintln!("equidist: enumerating at trace bound {n} on {} partitions", args.partitions);
    }
    let records = enumerate::enumerate_partitioned(&params, args.partitions).map_err(from_enum)?;
    if n >= 20_000 {
        eprintln!("equidist: {} records", records.len());
    }
    let grid = Grid2D::default_grid();
    let report = equidist::empirical_report_from_records(&records, n, &grid)
        .map_err(|e| Failure::precondition(e))?;

    let corollary: Option<CorollaryReport> = match &args.alpha {
        Some(text) => {
            let alpha = parse_exact(text)?;
            if alpha < Value::integer(1) {
                return Err(Failure::precondition("alpha must be >= 1"));
            }
            let matched = records
                .iter()
                .filter(|r| Value::Quadratic(r.omega.clone()) >= alpha)
                .count() as u64;
            let total = records.len() as u64;
            let ratio = matched as f64 / total as f64;
            let limit = analytic::mu_o_tail(alpha.to_f64()).map_err(Failure::precondition)?;
            Some(CorollaryReport {
                alpha: alpha.to_string(),
                n,
                matched,
                total,
                ratio,
                limit,
                residual: ratio - limit,
            })
        }
        None => None,
    };

    let window: Option<WindowReport> = match (&args.alpha, &args.beta1, &args.beta2) {
        (Some(a), Some(b1), Some(b2)) => {
            let alpha = parse_exact(a)?;
            let beta1 = parse_exact(b1)?;
            let beta2 = parse_exact(b2)?;
            let win = EnumParams::new(n, alpha.clone(), beta1.clone(), beta2.clone())
                .map_err(from_enum)?;
            let star_lo = win.beta2.recip().map_err(Failure::precondition)?.neg();
            let star_hi = win.beta1.recip().map_err(Failure::precondition)?;
            let in_window = records
                .iter()
                .filter(|r| {
                    let star = Value::Quadratic(r.omega_star.clone());
                    Value::Quadratic(r.omega.clone()) >= alpha && star >= star_lo && star <= star_hi
                })
                .count() as u64;
            let total = records.len() as u64;
            let frequency = in_window as f64 / total as f64;
            let (af, b1f, b2f) = (alpha.to_f64(), beta1.to_f64(), beta2.to_f64());
            let limit = ((af * b1f / (af * b1f - 1.0)) * ((af * b2f + 1.0) / (af * b2f))).ln()
                / (3.0 * LOG_G);
            Some(WindowReport { n, total, in_window, frequency, limit, residual: frequency - limit })
        }
        _ => None,
    };

    if let Some(prefix) = &args.marginals {
        let x_path = prefix.with_extension("x.dat");
        let y_path = prefix.with_extension("y.dat");
        fs::write(&x_path, equidist::gnuplot_dump(&report.x_marginal)).map_err(Failure::runtime)?;
        fs::write(&y_path, equidist::gnuplot_dump(&report.y_marginal)).map_err(Failure::runtime)?;
        eprintln!("equidist: wrote {} and {}", x_path.display(), y_path.display());
    }

    match args.format {
        Format::Json => {
            let mut obj = json!({
                "report": serde_json::to_value(&report).map_err(Failure::runtime)?,
            });
            if let Some(c) = &corollary {
                obj["corollary"] = serde_json::to_value(c).map_err(Failure::runtime)?;
            }
            if let Some(w) = &window {
                obj["window"] = serde_json::to_value(w).map_err(Failure::runtime)?;
            }
            emit_json(&obj, args.out.as_deref())
        }
        Format::Csv | Format::Tsv => {
            // tabular output carries the per-cell report; scalar reports go
            // to stderr as JSON lines
            let bytes = render_rows(&report.cells, args.format)?;
            write_bytes(&bytes, args.out.as_deref())?;
            if let Some(c) = &corollary {
                eprintln!("{}", serde_json::to_string(c).map_err(Failure::runtime)?);
            }
            if let Some(w) = &window {
                eprintln!("{}", serde_json::to_string(w).map_err(Failure::runtime)?);
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Expand(args) => run_expand(args),
        Command::Classify(args) => run_classify(args),
        Command::Factor(args) => run_factor(args),
        Command::Enumerate(args) => run_enumerate(args),
        Command::Count(args) => run_count(args),
        Command::Verify(args) => run_verify(args),
        Command::Equidist(args) => run_equidist(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let diagnostic = json!({
                "error": failure.kind_str(),
                "message": failure.message,
            });
            eprintln!("{diagnostic}");
            ExitCode::from(failure.code())
        }
    }
}
