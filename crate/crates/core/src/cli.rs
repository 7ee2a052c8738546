//! The `eulersieve` command line.
//!
//! Results go to `--out` or standard output; statistics and progress go to
//! standard error. Exit codes: 0 success, 1 verification failure, 2 bad
//! arguments, 3 I/O error, 4 network error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::catalog::{self, parse_terms_any, verify_terms, Solution};
use crate::engine::digest::format_digest;
use crate::engine::{self, EngineError, SearchConfig, SearchFlags};
use crate::numthy::{NumthyError, MAX_TERM};
use crate::oracle::{oracle_search, OracleLimits};
use crate::selftest;
use crate::worknet::server::unix_now;
use crate::worknet::worker::default_worker_id;
use crate::worknet::{worker_loop, Coordinator, CoordinatorConfig, Server, WorkerOptions, WorknetError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NETWORK: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "eulersieve", version, about = "Search for a⁶+b⁶ = c⁶+d⁶+e⁶+f⁶+g⁶")]
pub struct Cli {
    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exhaustive search up to a bound.
    Search(SearchArgs),
    /// Check solutions from a file exactly.
    Verify(VerifyArgs),
    /// Brute-force reference search for small bounds.
    Oracle(OracleArgs),
    /// Run the built-in property checks.
    Selftest(SelftestArgs),
    /// Run a coordinator for distributed search.
    Serve(ServeArgs),
    /// Compute workunits for a coordinator.
    Work(WorkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Text,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Largest allowed term.
    #[arg(long, value_name = "N")]
    pub limit: u32,
    /// Sieve prime (default: chosen from the bound).
    #[arg(long, value_name = "P")]
    pub prime: Option<u32>,
    /// Residue range A..B, end exclusive.
    #[arg(long, value_name = "A..B", value_parser = parse_range)]
    pub rp: Option<(u32, u32)>,
    #[arg(long, default_value_t = 1, value_name = "T")]
    pub threads: usize,
    /// Resume from and append to this file.
    #[arg(long, value_name = "F")]
    pub checkpoint: Option<PathBuf>,
    /// Disable the mod 7⁷ pair filter.
    #[arg(long)]
    pub no_t_filter: bool,
    /// Also report non-primitive solutions.
    #[arg(long)]
    pub include_imprimitive: bool,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: Format,
    #[arg(long, value_name = "F")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// JSON lines, equation lines, or the numbered catalog layout.
    pub file: PathBuf,
    /// Every term must be below this.
    #[arg(long, value_name = "N", default_value_t = MAX_TERM)]
    pub limit: u32,
    /// Also require the same set of solutions as this file.
    #[arg(long, value_name = "FILE")]
    pub against: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_name = "N")]
    pub limit: u32,
    #[arg(long, value_name = "F")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Smaller parameters; a few seconds.
    #[arg(long)]
    pub quick: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, value_name = "HOST:PORT")]
    pub bind: String,
    #[arg(long, value_name = "N")]
    pub limit: u32,
    #[arg(long, value_name = "P")]
    pub prime: Option<u32>,
    /// Residues per workunit.
    #[arg(long, default_value_t = 400, value_name = "K")]
    pub chunk: u32,
    /// Matching reports needed to validate a unit.
    #[arg(long, default_value_t = 2, value_name = "Q")]
    pub quorum: u32,
    #[arg(long, value_name = "F")]
    pub journal: PathBuf,
    #[arg(long)]
    pub no_t_filter: bool,
    #[arg(long)]
    pub include_imprimitive: bool,
    /// Keep answering for this many seconds after the last unit validates.
    #[arg(long, default_value_t = 10, value_name = "SECS")]
    pub linger: u64,
    /// Where to write the validated solutions.
    #[arg(long, value_name = "F")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WorkArgs {
    #[arg(long, value_name = "URL")]
    pub server: String,
    #[arg(long, default_value_t = 1, value_name = "T")]
    pub threads: usize,
    /// Process one workunit and exit.
    #[arg(long)]
    pub once: bool,
    #[arg(long, value_name = "ID")]
    pub worker_id: Option<String>,
    /// Seconds between polls while waiting for other workers.
    #[arg(long, default_value_t = 2.0, value_name = "SECS")]
    pub poll: f64,
    /// Stop after this many seconds without work.
    #[arg(long, value_name = "SECS")]
    pub max_idle: Option<u64>,
    /// Retries per request before giving up on the server.
    #[arg(long, default_value_t = 6, value_name = "K")]
    pub retries: u32,
    /// Flip one bit of every reported digest (fault injection).
    #[arg(long, hide = true)]
    pub corrupt_digest: bool,
}

/// Parses `A..B` with `A < B`.
pub fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: u32 = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
    let b: u32 = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
    if a >= b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Failure { code, msg: msg.into() }
    }
}

fn engine_code(e: &EngineError) -> u8 {
    match e {
        EngineError::CheckpointCorrupt(_) | EngineError::Io(_) => EXIT_IO,
        EngineError::Config(_) | EngineError::Numthy(_) | EngineError::CheckpointMismatch { .. } => EXIT_USAGE,
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure::new(engine_code(&e), e.to_string())
    }
}

impl From<WorknetError> for Failure {
    fn from(e: WorknetError) -> Self {
        let code = match &e {
            WorknetError::Config(_) | WorknetError::InvalidWorker(_) => EXIT_USAGE,
            WorknetError::Io(_) | WorknetError::Journal(_) => EXIT_IO,
            WorknetError::Engine(inner) => engine_code(inner),
            _ => EXIT_NETWORK,
        };
        Failure::new(code, e.to_string())
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::new(EXIT_IO, format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp_secs()
        .try_init();
    let result = match cli.command {
        Command::Search(a) => cmd_search(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Selftest(a) => cmd_selftest(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Work(a) => cmd_work(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn render(solutions: &[Solution], format: Format) -> String {
    let mut out = String::new();
    for s in solutions {
        match format {
            Format::Jsonl => out.push_str(&s.to_json_line()),
            Format::Text => out.push_str(&s.to_text()),
        }
        out.push('\n');
    }
    out
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| io_failure(path, e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::new(EXIT_IO, format!("stdout: {e}")))
        }
    }
}

fn cmd_search(a: SearchArgs) -> Result<u8, Failure> {
    let mut cfg = SearchConfig::new(a.limit);
    cfg.p = a.prime.unwrap_or(0);
    if let Some((begin, end)) = a.rp {
        cfg.rp_begin = begin;
        cfg.rp_end = Some(end);
    }
    cfg.threads = a.threads.max(1);
    cfg.checkpoint = a.checkpoint;
    cfg.flags = SearchFlags {
        t_filter: !a.no_t_filter,
        include_imprimitive: a.include_imprimitive,
    };
    let out = engine::search(&cfg)?;
    emit(&render(&out.solutions, a.format), a.out.as_deref())?;
    eprintln!(
        "N={} p={} residues={}..{} resumed={} threads={}",
        out.bound,
        out.p,
        out.rp_begin,
        out.rp_end,
        out.resumed_units(),
        cfg.threads
    );
    eprintln!(
        "pairs={} probes={} hits={} confirmed={}",
        out.stats.pairs, out.stats.probes, out.stats.hits, out.stats.confirmed
    );
    for r in &out.relations {
        eprintln!("relation {}^6+{}^6={}^6+{}^6", r[0], r[1], r[2], r[3]);
    }
    eprintln!(
        "solutions={} digest={} time={:.2}s",
        out.solutions.len(),
        format_digest(out.range_digest()),
        out.elapsed_secs
    );
    Ok(EXIT_OK)
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn read_terms(path: &Path) -> Result<Vec<[u32; 7]>, Failure> {
    parse_terms_any(&read_text(path)?).map_err(|e| Failure::new(EXIT_FAILED, format!("{}: {e}", path.display())))
}

fn cmd_verify(a: VerifyArgs) -> Result<u8, Failure> {
    let started = Instant::now();
    let tuples = read_terms(&a.file)?;
    let mut failed = 0usize;
    let mut imprimitive = 0usize;
    let mut seen = std::collections::BTreeSet::new();
    let mut solutions = Vec::with_capacity(tuples.len());
    for (i, t) in tuples.iter().enumerate() {
        let report = verify_terms(*t, a.limit);
        let mut problems: Vec<String> = report
            .failures()
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect();
        if report.passed() {
            let s = Solution::from_terms(*t).expect("verified tuples are solutions");
            if s.is_trivial() {
                problems.push("trivial".into());
            }
            if !seen.insert(s.terms()) {
                problems.push("duplicate".into());
            }
            if !s.is_primitive() {
                imprimitive += 1;
            }
            solutions.push(s);
        }
        if !problems.is_empty() {
            failed += 1;
            eprintln!("entry {}: {:?}: {}", i + 1, t, problems.join(", "));
        }
    }
    if !catalog::is_lex_sorted(&solutions) {
        eprintln!("note: entries are not in lexicographic order");
    }
    if imprimitive > 0 {
        eprintln!("note: {imprimitive} entries are not primitive");
    }
    let mut code = EXIT_OK;
    if failed > 0 {
        println!("{failed} of {} solutions failed verification", tuples.len());
        code = EXIT_FAILED;
    } else {
        println!("{} solutions verified", tuples.len());
    }
    if let Some(other) = &a.against {
        let expected: Vec<Solution> = read_terms(other)?
            .into_iter()
            .filter_map(|t| Solution::from_terms(t).ok())
            .collect();
        let (missing, extra) = catalog::diff(&solutions, &expected);
        for s in &missing {
            println!("missing {s}");
        }
        for s in &extra {
            println!("extra {s}");
        }
        if missing.is_empty() && extra.is_empty() {
            println!("same {} solutions as {}", expected.len(), other.display());
        } else {
            code = EXIT_FAILED;
        }
    }
    eprintln!("time={:.2}s", started.elapsed().as_secs_f64());
    Ok(code)
}

fn cmd_oracle(a: OracleArgs) -> Result<u8, Failure> {
    let started = Instant::now();
    let found =
        oracle_search(a.limit, &OracleLimits::default()).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    emit(&render(&found, Format::Jsonl), a.out.as_deref())?;
    eprintln!(
        "N={} solutions={} time={:.2}s",
        a.limit,
        found.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(EXIT_OK)
}

fn cmd_selftest(a: SelftestArgs) -> Result<u8, Failure> {
    let level = if a.quick {
        selftest::Level::Quick
    } else {
        selftest::Level::Full
    };
    let mut all = true;
    for outcome in selftest::run_all(level) {
        println!("{outcome}");
        all &= outcome.passed();
    }
    Ok(if all { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_serve(a: ServeArgs) -> Result<u8, Failure> {
    if a.limit == 0 || a.limit > MAX_TERM {
        return Err(Failure::new(EXIT_USAGE, format!("--limit must be in 1..={MAX_TERM}")));
    }
    let p = match a.prime {
        Some(p) => {
            crate::numthy::PrimeModulus::new(p, 1).map_err(|e: NumthyError| Failure::new(EXIT_USAGE, e.to_string()))?;
            p
        }
        None => engine::auto_prime(a.limit),
    };
    let config = CoordinatorConfig {
        bound: a.limit,
        p,
        chunk: a.chunk,
        quorum: a.quorum,
        flags: SearchFlags {
            t_filter: !a.no_t_filter,
            include_imprimitive: a.include_imprimitive,
        },
    };
    let coord = Coordinator::open(config, &a.journal, unix_now())?;
    let server = Server::start(&a.bind, coord)?;
    eprintln!(
        "serving N={} p={} units={} at {}",
        a.limit,
        p,
        server.coordinator().state().units.len(),
        server.url()
    );
    while !server.coordinator().is_complete() {
        std::thread::sleep(Duration::from_millis(250));
    }
    eprintln!("all units validated; lingering {}s", a.linger);
    std::thread::sleep(Duration::from_secs(a.linger));
    let coord = server.shutdown();
    emit(&render(&coord.solutions(), Format::Jsonl), a.out.as_deref())?;
    eprintln!("solutions={}", coord.solutions().len());
    Ok(EXIT_OK)
}

fn cmd_work(a: WorkArgs) -> Result<u8, Failure> {
    let mut opts = WorkerOptions::new(a.server, a.worker_id.unwrap_or_else(default_worker_id));
    opts.threads = a.threads.max(1);
    opts.once = a.once;
    opts.corrupt_digest = a.corrupt_digest;
    if !(a.poll.is_finite() && a.poll >= 0.0) {
        return Err(Failure::new(EXIT_USAGE, "--poll must be a nonnegative number"));
    }
    opts.idle_poll = Duration::from_secs_f64(a.poll);
    opts.max_idle = a.max_idle.map(Duration::from_secs);
    opts.max_retries = a.retries;
    let summary = worker_loop(&opts)?;
    eprintln!(
        "worker {}: units={} accepted={} validated={} rejected={} late={} solutions={}",
        opts.worker_id,
        summary.units,
        summary.accepted,
        summary.validated,
        summary.rejected,
        summary.late,
        summary.solutions
    );
    Ok(EXIT_OK)
}
