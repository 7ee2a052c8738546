//! Worker client: fetch a unit, run the engine over its residue range,
//! report the range digest.

use std::time::{Duration, Instant};

use serde::de::DeserializeOwned;

use crate::catalog::SolutionJson;
use crate::engine::digest::format_digest;
use crate::engine::{search_with, SearchConfig};
use crate::numthy::{Mod7Tables, PrimeModulus};

use super::wire::{ResultMsg, StatsMsg, StatusMsg, SubmitReply, SubmitStatus, WorkunitMsg};
use super::{valid_worker_id, WorknetError, Workunit};

#[derive(Debug, Clone)]
pub struct WorkerOptions {
    /// Base URL such as `http://127.0.0.1:8600`.
    pub server: String,
    pub worker_id: String,
    pub threads: usize,
    /// Process at most one unit, then return.
    pub once: bool,
    /// Flip the lowest digest bit of every report. Testing only.
    pub corrupt_digest: bool,
    /// Consecutive network failures tolerated per request.
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub backoff_max: Duration,
    /// Wait between polls while other workers hold the remaining units.
    pub idle_poll: Duration,
    /// Give up after this long without receiving work.
    pub max_idle: Option<Duration>,
}

impl WorkerOptions {
    pub fn new(server: impl Into<String>, worker_id: impl Into<String>) -> Self {
        WorkerOptions {
            server: server.into(),
            worker_id: worker_id.into(),
            threads: 1,
            once: false,
            corrupt_digest: false,
            max_retries: 6,
            backoff_base: Duration::from_millis(250),
            backoff_max: Duration::from_secs(8),
            idle_poll: Duration::from_secs(2),
            max_idle: None,
        }
    }
}

/// A worker id that is unlikely to collide with another process.
pub fn default_worker_id() -> String {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.subsec_nanos())
        .unwrap_or(0);
    format!("w{}-{nanos:08x}", std::process::id())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorkerSummary {
    pub units: usize,
    pub accepted: usize,
    pub validated: usize,
    pub rejected: usize,
    /// Reports the coordinator refused because the assignment had closed.
    pub late: usize,
    /// Distinct solutions found across all units.
    pub solutions: usize,
}

/// Engine run for one unit, ready to report.
#[derive(Debug, Clone)]
pub struct UnitReport {
    pub digest: u64,
    pub solutions: Vec<SolutionJson>,
    pub stats: StatsMsg,
}

/// Reuses the prime tables between units with the same `(p, N)`.
#[derive(Default)]
pub struct UnitRunner {
    cached: Option<(u32, u32, PrimeModulus)>,
}

impl UnitRunner {
    pub fn run(&mut self, unit: &Workunit, threads: usize) -> Result<UnitReport, WorknetError> {
        let mut cfg = SearchConfig::new(unit.bound);
        cfg.p = unit.p;
        cfg.rp_begin = unit.rp_begin;
        cfg.rp_end = Some(unit.rp_end);
        cfg.threads = threads;
        cfg.flags = unit.flags;
        let (p, begin, end) = cfg.resolve()?;
        let stale = !matches!(&self.cached, Some((cp, cb, _)) if *cp == p && *cb == unit.bound);
        if stale {
            let pm = PrimeModulus::new(p, unit.bound).map_err(crate::engine::EngineError::from)?;
            self.cached = Some((p, unit.bound, pm));
        }
        let (_, _, pm) = self.cached.as_ref().expect("filled above");
        let out = search_with(&cfg, pm, Mod7Tables::global(), begin, end)?;
        Ok(UnitReport {
            digest: out.range_digest(),
            solutions: out.solutions.iter().map(SolutionJson::bare).collect(),
            stats: StatsMsg {
                pairs: out.stats.pairs,
                probes: out.stats.probes,
                hits: out.stats.hits,
            },
        })
    }
}

enum Fetched<T> {
    Body(T),
    NoContent,
}

struct Client {
    agent: ureq::Agent,
    base: String,
    opts: WorkerOptions,
}

impl Client {
    fn new(opts: &WorkerOptions) -> Self {
        Client {
            agent: ureq::AgentBuilder::new()
                .timeout_connect(Duration::from_secs(10))
                .timeout(Duration::from_secs(120))
                .build(),
            base: opts.server.trim_end_matches('/').to_string(),
            opts: opts.clone(),
        }
    }

    /// Runs `req` with exponential backoff on transport failures and 5xx.
    fn with_retry<T: DeserializeOwned>(
        &self,
        what: &str,
        req: impl Fn() -> Result<ureq::Response, ureq::Error>,
    ) -> Result<Fetched<T>, WorknetError> {
        let mut delay = self.opts.backoff_base;
        let mut attempt = 0;
        loop {
            let err = match req() {
                Ok(resp) if resp.status() == 204 => return Ok(Fetched::NoContent),
                Ok(resp) => {
                    return resp
                        .into_json::<T>()
                        .map(Fetched::Body)
                        .map_err(|e| WorknetError::Network(format!("{what}: bad response body: {e}")));
                }
                Err(ureq::Error::Status(status, resp)) if status < 500 => {
                    let body = resp.into_string().unwrap_or_default();
                    return Err(WorknetError::Http { status, body });
                }
                Err(e) => e.to_string(),
            };
            attempt += 1;
            if attempt > self.opts.max_retries {
                return Err(WorknetError::Network(format!("{what}: {err}")));
            }
            log::warn!("{what} failed ({err}); retry {attempt} in {delay:?}");
            std::thread::sleep(delay);
            delay = (delay * 2).min(self.opts.backoff_max);
        }
    }

    fn fetch(&self) -> Result<Option<Workunit>, WorknetError> {
        let url = format!("{}/v1/work", self.base);
        let r = self.with_retry::<WorkunitMsg>("fetch", || {
            self.agent.get(&url).query("worker_id", &self.opts.worker_id).call()
        })?;
        Ok(match r {
            Fetched::Body(m) => Some(m.into()),
            Fetched::NoContent => None,
        })
    }

    fn status(&self) -> Result<StatusMsg, WorknetError> {
        let url = format!("{}/v1/status", self.base);
        match self.with_retry::<StatusMsg>("status", || self.agent.get(&url).call())? {
            Fetched::Body(s) => Ok(s),
            Fetched::NoContent => Err(WorknetError::Network("status: empty response".into())),
        }
    }

    fn submit(&self, msg: &ResultMsg) -> Result<SubmitStatus, WorknetError> {
        let url = format!("{}/v1/result", self.base);
        match self.with_retry::<SubmitReply>("submit", || self.agent.post(&url).send_json(msg))? {
            Fetched::Body(r) => Ok(r.status),
            Fetched::NoContent => Err(WorknetError::Network("submit: empty response".into())),
        }
    }
}

/// Fetches and computes units until the coordinator reports every unit
/// validated (or after one unit with `once`).
pub fn worker_loop(opts: &WorkerOptions) -> Result<WorkerSummary, WorknetError> {
    if !valid_worker_id(&opts.worker_id) {
        return Err(WorknetError::InvalidWorker(opts.worker_id.clone()));
    }
    let client = Client::new(opts);
    let mut runner = UnitRunner::default();
    let mut summary = WorkerSummary::default();
    let mut found = std::collections::BTreeSet::new();
    let mut idle_since = Instant::now();
    loop {
        let Some(unit) = client.fetch()? else {
            if opts.once || client.status()?.all_validated() {
                break;
            }
            if opts.max_idle.is_some_and(|m| idle_since.elapsed() >= m) {
                log::info!("no work for {:?}; stopping", idle_since.elapsed());
                break;
            }
            std::thread::sleep(opts.idle_poll);
            continue;
        };
        log::info!("computing {} (r_p {}..{})", unit.id, unit.rp_begin, unit.rp_end);
        let started = Instant::now();
        let report = runner.run(&unit, opts.threads)?;
        let digest = if opts.corrupt_digest {
            report.digest ^ 1
        } else {
            report.digest
        };
        found.extend(report.solutions.iter().map(|s| s.terms()));
        let msg = ResultMsg {
            id: unit.id.clone(),
            worker_id: opts.worker_id.clone(),
            digest: format_digest(digest),
            solutions: report.solutions,
            stats: report.stats,
        };
        summary.units += 1;
        match client.submit(&msg) {
            Ok(SubmitStatus::Accepted) => summary.accepted += 1,
            Ok(SubmitStatus::Validated) => summary.validated += 1,
            Ok(SubmitStatus::Rejected) => summary.rejected += 1,
            Err(WorknetError::Http { status: 409, body }) => {
                log::warn!("{} no longer assigned to us: {body}", unit.id);
                summary.late += 1;
            }
            Err(e) => return Err(e),
        }
        log::info!("{} done in {:.1}s", unit.id, started.elapsed().as_secs_f64());
        idle_since = Instant::now();
        if opts.once {
            break;
        }
    }
    summary.solutions = found.len();
    Ok(summary)
}
