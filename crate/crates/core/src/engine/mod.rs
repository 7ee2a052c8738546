//! The sieve search.
//!
//! For one residue `r_p` the engine builds the table of reduced triples with
//! `S′ ≡ r_p (mod p)`. Then, for every admissible class `v` mod 7⁶, it buckets
//! the pairs of that class by their sum mod `p` and matches bucket `s` against
//! bucket `s − 7⁶·r_p`: any difference of exact pair sums that equals `7⁶·S′`
//! for a stored triple is a solution.
//!
//! [`search_rp`] is the direct per-residue procedure. [`search`] processes
//! residues in batches that share one pass over the classes `v`; it produces
//! exactly the same per-residue results (including statistics and digests).

pub mod checkpoint;
pub mod digest;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use thiserror::Error;

use crate::catalog::Solution;
use crate::numthy::{powmod, select_prime, Mod7Tables, NumthyError, PrimeModulus, Wide128, M6, MAX_TERM};
use crate::sievetab::{
    admissible_classes, build_triple_table, pairs_for_class, t_compatible, PairBuckets, PairRecord, TripleEntry,
    TripleFilters, TripleTable,
};

use self::checkpoint::{Checkpoint, CheckpointHeader};
pub use self::digest::{digest_range, digest_result, fnv1a64};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Numthy(#[from] NumthyError),
    #[error("checkpoint belongs to a different search: expected `{expected}`, found `{found}`")]
    CheckpointMismatch { expected: String, found: String },
    #[error("checkpoint is corrupt: {0}")]
    CheckpointCorrupt(String),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchFlags {
    /// Apply the 7⁷ t-digit filter when matching pairs.
    pub t_filter: bool,
    /// Keep solutions whose terms share a common factor.
    pub include_imprimitive: bool,
}

impl Default for SearchFlags {
    fn default() -> Self {
        SearchFlags {
            t_filter: true,
            include_imprimitive: false,
        }
    }
}

impl SearchFlags {
    /// Bit 0: t filter; bit 1: include imprimitive.
    pub fn bits(&self) -> u32 {
        u32::from(self.t_filter) | (u32::from(self.include_imprimitive) << 1)
    }

    pub fn from_bits(bits: u32) -> Self {
        SearchFlags {
            t_filter: bits & 1 != 0,
            include_imprimitive: bits & 2 != 0,
        }
    }
}

/// About 350 MB of triple tables.
pub const DEFAULT_BATCH_ENTRIES: usize = 1 << 23;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    /// Inclusive bound on every term.
    pub bound: u32,
    /// Sieve prime; 0 selects [`auto_prime`].
    pub p: u32,
    pub rp_begin: u32,
    /// Exclusive end of the residue range; `None` means `p`.
    pub rp_end: Option<u32>,
    pub threads: usize,
    pub flags: SearchFlags,
    pub checkpoint: Option<PathBuf>,
    /// Cap on triple entries held at once, shared by all threads; 0 picks
    /// [`DEFAULT_BATCH_ENTRIES`].
    pub batch_entries: usize,
}

impl SearchConfig {
    pub fn new(bound: u32) -> Self {
        SearchConfig {
            bound,
            p: 0,
            rp_begin: 0,
            rp_end: None,
            threads: 1,
            flags: SearchFlags::default(),
            checkpoint: None,
            batch_entries: 0,
        }
    }

    pub fn resolved_prime(&self) -> Result<u32, EngineError> {
        if self.p == 0 {
            Ok(auto_prime(self.bound))
        } else {
            Ok(self.p)
        }
    }

    /// Checks the configuration and resolves the prime and residue range.
    pub fn resolve(&self) -> Result<(u32, u32, u32), EngineError> {
        if self.bound == 0 {
            return Err(EngineError::Config("bound must be at least 1".into()));
        }
        if self.bound > MAX_TERM {
            return Err(EngineError::Config(format!(
                "bound {} above the supported maximum {MAX_TERM}",
                self.bound
            )));
        }
        let p = self.resolved_prime()?;
        let end = self.rp_end.unwrap_or(p);
        if self.rp_begin >= end || end > p {
            return Err(EngineError::Config(format!(
                "residue range [{}, {end}) must be nonempty and within [0, {p})",
                self.rp_begin
            )));
        }
        Ok((p, self.rp_begin, end))
    }

    fn batch_budget(&self) -> usize {
        let total = if self.batch_entries > 0 {
            self.batch_entries
        } else {
            DEFAULT_BATCH_ENTRIES
        };
        (total / self.threads.max(1)).max(1)
    }
}

/// Prime that balances the root table (about `p` entries) against the
/// expected triple table (about `(N/7)³ / (6p)` entries).
pub fn auto_prime(bound: u32) -> u32 {
    let m = f64::from(bound / 7);
    let target = (m * m * m / 6.0).sqrt().round() as u64;
    select_prime(target.max(11)).expect("bounds up to 250000 give targets far below 2^31")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RpStats {
    /// Pair records generated over all classes.
    pub pairs: u64,
    /// Pair-of-pairs matched by residue (after the t filter).
    pub probes: u64,
    /// Triple-table hits.
    pub hits: u64,
    /// Hits that passed the exact equation check.
    pub confirmed: u64,
}

impl RpStats {
    pub fn add(&mut self, other: &RpStats) {
        self.pairs += other.pairs;
        self.probes += other.probes;
        self.hits += other.hits;
        self.confirmed += other.confirmed;
    }
}

/// Left pair, right pair, and the reduced triple of one match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
    pub entry: TripleEntry,
    /// `a⁶ + b⁶ − c⁶ − d⁶`.
    pub diff: Wide128,
}

/// Exact check of `a⁶+b⁶ = c⁶+d⁶+(7e′)⁶+(7f′)⁶+(7g′)⁶`.
pub fn confirm_candidate(c: &Candidate) -> bool {
    let [e, f, g] = c.entry.coords();
    let terms = [c.a, c.b, c.c, c.d, 7 * e, 7 * f, 7 * g];
    if terms.iter().any(|&t| t > MAX_TERM) {
        return false;
    }
    let s = |x: u32| crate::numthy::sixth(x);
    s(c.a) + s(c.b) == s(c.c) + s(c.d) + s(7 * e) + s(7 * f) + s(7 * g)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RpResult {
    pub r_p: u32,
    /// Canonical, deduplicated, lexicographically sorted.
    pub solutions: Vec<Solution>,
    /// `a⁶+b⁶ = c⁶+d⁶` with distinct pairs, as `[a, b, c, d]`. These also
    /// appear among `solutions` with three zero terms.
    pub relations: Vec<[u32; 4]>,
    pub stats: RpStats,
    pub digest: u64,
}

#[derive(Default)]
struct Accumulator {
    stats: RpStats,
    solutions: BTreeSet<Solution>,
    relations: BTreeSet<[u32; 4]>,
}

impl Accumulator {
    #[inline(always)]
    fn probe(&mut self, table: &TripleTable, lhs: &PairRecord, rhs: &PairRecord, flags: SearchFlags) {
        if flags.t_filter && !t_compatible(lhs.t, rhs.t) {
            return;
        }
        self.stats.probes += 1;
        if lhs.sum < rhs.sum {
            return;
        }
        let diff = lhs.sum - rhs.sum;
        debug_assert_eq!(
            diff % Wide128::from(M6),
            0,
            "pairs of one class differ by a multiple of 7^6"
        );
        for entry in table.lookup(diff / Wide128::from(M6)) {
            self.stats.hits += 1;
            let cand = Candidate {
                a: lhs.a,
                b: lhs.b,
                c: rhs.a,
                d: rhs.b,
                entry,
                diff,
            };
            if confirm_candidate(&cand) {
                self.stats.confirmed += 1;
                self.accept(&cand, flags);
            }
        }
    }

    fn accept(&mut self, c: &Candidate, flags: SearchFlags) {
        let [e, f, g] = c.entry.coords();
        let Ok(sol) = Solution::canonicalize([c.a, c.b], [c.c, c.d, 7 * e, 7 * f, 7 * g]) else {
            return;
        };
        if sol.is_trivial() {
            return;
        }
        if c.diff == 0 {
            let rel = [c.a, c.b, c.c, c.d];
            if self.relations.insert(rel) {
                log::warn!("found a^6+b^6 = c^6+d^6 relation {rel:?}");
            }
        }
        if sol.is_primitive() || flags.include_imprimitive {
            self.solutions.insert(sol);
        }
    }

    fn finish(self, bound: u32, p: u32, r_p: u32, flags: SearchFlags) -> RpResult {
        let solutions: Vec<Solution> = self.solutions.into_iter().collect();
        let digest = digest_result(bound, p, r_p, flags.bits(), &solutions, &self.stats);
        RpResult {
            r_p,
            solutions,
            relations: self.relations.into_iter().collect(),
            stats: self.stats,
            digest,
        }
    }
}

/// Searches a single residue class `r_p`.
pub fn search_rp(bound: u32, flags: SearchFlags, pm: &PrimeModulus, m7: &Mod7Tables, r_p: u32) -> RpResult {
    let p = pm.p();
    let table = build_triple_table(bound, pm, r_p, TripleFilters::default());
    let mut acc = Accumulator::default();
    if table.is_empty() {
        return acc.finish(bound, p, r_p, flags);
    }
    let shift = (u64::from(M6) * u64::from(r_p) % u64::from(p)) as u32;
    for v in admissible_classes() {
        let buckets = pairs_for_class(bound, pm, m7, v);
        acc.stats.pairs += buckets.len() as u64;
        for (s, lhs_bucket) in buckets.buckets() {
            let rhs_bucket = buckets.bucket((s + p - shift) % p);
            if rhs_bucket.is_empty() {
                continue;
            }
            for lhs in lhs_bucket {
                for rhs in rhs_bucket {
                    acc.probe(&table, lhs, rhs, flags);
                }
            }
        }
    }
    acc.finish(bound, p, r_p, flags)
}

const NO_SLOT: u32 = u32::MAX;

/// Searches several distinct residues with one pass over the classes `v`. Results are
/// returned in the order of `residues` and are identical to calling
/// [`search_rp`] on each.
pub fn search_batch(
    bound: u32,
    flags: SearchFlags,
    pm: &PrimeModulus,
    m7: &Mod7Tables,
    residues: &[u32],
) -> Vec<RpResult> {
    let tables: Vec<TripleTable> = residues
        .iter()
        .map(|&r| build_triple_table(bound, pm, r, TripleFilters::default()))
        .collect();
    search_with_tables(bound, flags, pm, m7, residues, &tables)
}

fn search_with_tables(
    bound: u32,
    flags: SearchFlags,
    pm: &PrimeModulus,
    m7: &Mod7Tables,
    residues: &[u32],
    tables: &[TripleTable],
) -> Vec<RpResult> {
    let p = pm.p();
    let mut accs: Vec<Accumulator> = residues.iter().map(|_| Accumulator::default()).collect();
    let active: Vec<usize> = (0..residues.len()).filter(|&i| !tables[i].is_empty()).collect();
    if !active.is_empty() {
        let mut slot_of = vec![NO_SLOT; p as usize];
        for &i in &active {
            slot_of[residues[i] as usize] = i as u32;
        }
        let shifts: Vec<u32> = residues
            .iter()
            .map(|&r| (u64::from(M6) * u64::from(r) % u64::from(p)) as u32)
            .collect();
        // r_p = (s_lhs − s_rhs) · 7⁻⁶ mod p
        let inv_m6 = powmod(u64::from(M6) % u64::from(p), u64::from(p) - 2, u64::from(p));
        for v in admissible_classes() {
            let buckets = pairs_for_class(bound, pm, m7, v);
            let n = buckets.len();
            for &i in &active {
                accs[i].stats.pairs += n as u64;
            }
            if n == 0 {
                continue;
            }
            if n <= active.len() {
                match_all_pairs(&buckets, p, inv_m6, &slot_of, tables, &mut accs, flags);
            } else {
                for &i in &active {
                    let shift = shifts[i];
                    for (s, lhs_bucket) in buckets.buckets() {
                        let rhs_bucket = buckets.bucket((s + p - shift) % p);
                        for lhs in lhs_bucket {
                            for rhs in rhs_bucket {
                                accs[i].probe(&tables[i], lhs, rhs, flags);
                            }
                        }
                    }
                }
            }
        }
    }
    accs.into_iter()
        .zip(residues)
        .map(|(acc, &r)| acc.finish(bound, p, r, flags))
        .collect()
}

// Every ordered pair of records determines exactly one residue class; only
// classes present in the batch are probed.
fn match_all_pairs(
    buckets: &PairBuckets,
    p: u32,
    inv_m6: u64,
    slot_of: &[u32],
    tables: &[TripleTable],
    accs: &mut [Accumulator],
    flags: SearchFlags,
) {
    let records = buckets.records();
    for lhs in records {
        for rhs in records {
            let delta = u64::from((lhs.s + p - rhs.s) % p);
            let r = (delta * inv_m6 % u64::from(p)) as usize;
            let slot = slot_of[r];
            if slot != NO_SLOT {
                accs[slot as usize].probe(&tables[slot as usize], lhs, rhs, flags);
            }
        }
    }
}

/// Per-residue outcome kept in a [`SearchOutcome`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitSummary {
    pub r_p: u32,
    pub digest: u64,
    pub solutions: usize,
    /// Loaded from a checkpoint rather than computed in this run.
    pub resumed: bool,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub bound: u32,
    pub p: u32,
    pub flags: SearchFlags,
    pub rp_begin: u32,
    pub rp_end: u32,
    /// Canonical, deduplicated, lexicographically sorted.
    pub solutions: Vec<Solution>,
    pub relations: Vec<[u32; 4]>,
    /// One entry per residue in the range, ascending.
    pub units: Vec<UnitSummary>,
    /// Totals over residues computed in this run.
    pub stats: RpStats,
    pub elapsed_secs: f64,
}

impl SearchOutcome {
    /// Digest of the whole residue range (see [`digest_range`]).
    pub fn range_digest(&self) -> u64 {
        digest_range(self.units.iter().map(|u| (u.r_p, u.digest)))
    }

    pub fn resumed_units(&self) -> usize {
        self.units.iter().filter(|u| u.resumed).count()
    }
}

struct Sink {
    results: Vec<RpResult>,
    checkpoint: Option<Checkpoint>,
    error: Option<std::io::Error>,
    done: usize,
}

/// Runs every residue in the configured range and merges the results.
pub fn search(cfg: &SearchConfig) -> Result<SearchOutcome, EngineError> {
    let (p, begin, end) = cfg.resolve()?;
    let pm = PrimeModulus::new(p, cfg.bound)?;
    search_with(cfg, &pm, Mod7Tables::global(), begin, end)
}

/// [`search`] with caller-supplied tables.
pub fn search_with(
    cfg: &SearchConfig,
    pm: &PrimeModulus,
    m7: &Mod7Tables,
    begin: u32,
    end: u32,
) -> Result<SearchOutcome, EngineError> {
    let started = Instant::now();
    let p = pm.p();
    let flags = cfg.flags;
    let mut checkpoint = match &cfg.checkpoint {
        Some(path) => Some(Checkpoint::open(
            path,
            CheckpointHeader {
                bound: cfg.bound,
                p,
                flags: flags.bits(),
            },
        )?),
        None => None,
    };
    let mut units = Vec::with_capacity((end - begin) as usize);
    let mut solutions = BTreeSet::new();
    let mut todo = Vec::new();
    for r in begin..end {
        match checkpoint.as_ref().and_then(|c| c.completed().get(&r)) {
            Some(done) => {
                units.push(UnitSummary {
                    r_p: r,
                    digest: done.digest,
                    solutions: done.solutions.len(),
                    resumed: true,
                });
                solutions.extend(done.solutions.iter().copied());
            }
            None => todo.push(r),
        }
    }
    if !units.is_empty() {
        log::info!("resuming: {} of {} residues already complete", units.len(), end - begin);
    }

    let total = todo.len();
    let queue = Mutex::new(todo.into_iter());
    let budget = cfg.batch_budget();
    let sink = Mutex::new(Sink {
        results: Vec::new(),
        checkpoint: checkpoint.take(),
        error: None,
        done: 0,
    });
    let threads = cfg.threads.max(1);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let mut residues = Vec::new();
                let mut tables = Vec::new();
                let mut held = 0usize;
                while held < budget {
                    let next = queue.lock().expect("queue lock").next();
                    let Some(r) = next else { break };
                    let table = build_triple_table(cfg.bound, pm, r, TripleFilters::default());
                    held += table.len().max(1);
                    residues.push(r);
                    tables.push(table);
                }
                if residues.is_empty() {
                    break;
                }
                let results = search_with_tables(cfg.bound, flags, pm, m7, &residues, &tables);
                drop(tables);
                let mut sink = sink.lock().expect("sink lock");
                if sink.error.is_some() {
                    break;
                }
                for res in results {
                    if let Some(ck) = sink.checkpoint.as_mut() {
                        if let Err(e) = ck.append(res.r_p, res.digest, &res.solutions) {
                            sink.error = Some(e);
                            break;
                        }
                    }
                    sink.done += 1;
                    sink.results.push(res);
                }
                log::debug!("{}/{} residues done", sink.done, total);
            });
        }
    });
    let sink = sink.into_inner().expect("sink lock");
    if let Some(e) = sink.error {
        return Err(e.into());
    }

    let mut stats = RpStats::default();
    let mut relations = BTreeSet::new();
    for res in &sink.results {
        stats.add(&res.stats);
        solutions.extend(res.solutions.iter().copied());
        relations.extend(res.relations.iter().copied());
        units.push(UnitSummary {
            r_p: res.r_p,
            digest: res.digest,
            solutions: res.solutions.len(),
            resumed: false,
        });
    }
    units.sort_by_key(|u| u.r_p);
    Ok(SearchOutcome {
        bound: cfg.bound,
        p,
        flags,
        rp_begin: begin,
        rp_end: end,
        solutions: solutions.into_iter().collect(),
        relations: relations.into_iter().collect(),
        units,
        stats,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}
