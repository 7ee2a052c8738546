//! Workunit bookkeeping: assignment, quorum validation, and journal replay.
//!
//! Every state change goes through an [`Event`]. Live calls write the event
//! to the journal first and then apply it, so replaying the journal through
//! the same [`CoordinatorState::apply`] rebuilds the exact state.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::catalog::{Solution, SolutionJson};
use crate::engine::digest::{format_digest, parse_digest};
use crate::engine::SearchFlags;

use super::journal::{Event, Journal, JOURNAL_VERSION};
use super::wire::{StatsMsg, StatusMsg, SubmitStatus, WorkunitMsg};
use super::{partition, valid_worker_id, WorknetError, Workunit};

/// Floor on assignment deadlines, in seconds.
pub const MIN_DEADLINE_SECS: u64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoordinatorConfig {
    pub bound: u32,
    pub p: u32,
    pub chunk: u32,
    pub quorum: u32,
    pub flags: SearchFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UnitStatus {
    Pending,
    Assigned,
    Validated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub worker: String,
    pub assigned_at: u64,
    pub deadline: u64,
    pub open: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub worker: String,
    pub digest: u64,
    pub solutions: Vec<Solution>,
    pub stats: StatsMsg,
    pub t: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitState {
    pub unit: Workunit,
    pub assignments: Vec<Assignment>,
    pub reports: Vec<Report>,
    pub validated: Option<u64>,
}

impl UnitState {
    fn open_assignment(&self, worker: &str) -> Option<usize> {
        self.assignments.iter().position(|a| a.open && a.worker == worker)
    }

    fn active_assignments(&self, now: u64) -> usize {
        self.assignments.iter().filter(|a| a.open && a.deadline > now).count()
    }

    fn has_reported(&self, worker: &str) -> bool {
        self.reports.iter().any(|r| r.worker == worker)
    }

    /// Largest group of distinct workers agreeing on one digest, with that
    /// digest. Ties go to the digest reported first.
    fn best_group(&self) -> Option<(u64, usize)> {
        let mut groups: Vec<(u64, BTreeSet<&str>)> = Vec::new();
        for r in &self.reports {
            match groups.iter_mut().find(|(d, _)| *d == r.digest) {
                Some((_, ws)) => {
                    ws.insert(&r.worker);
                }
                None => groups.push((r.digest, BTreeSet::from([r.worker.as_str()]))),
            }
        }
        groups
            .into_iter()
            .map(|(d, ws)| (d, ws.len()))
            .fold(None, |best, cur| match best {
                Some((_, n)) if n >= cur.1 => best,
                _ => Some(cur),
            })
    }

    /// Further matching reports required before the unit validates.
    fn reports_needed(&self, quorum: u32) -> usize {
        if self.validated.is_some() {
            return 0;
        }
        let best = self.best_group().map_or(0, |(_, n)| n);
        (quorum as usize).saturating_sub(best)
    }

    pub fn status(&self, quorum: u32, now: u64) -> UnitStatus {
        if self.validated.is_some() {
            UnitStatus::Validated
        } else if self.reports.len() >= quorum as usize {
            UnitStatus::Inconclusive
        } else if self.active_assignments(now) > 0 {
            UnitStatus::Assigned
        } else {
            UnitStatus::Pending
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinatorState {
    pub config: CoordinatorConfig,
    pub units: Vec<UnitState>,
    index: BTreeMap<String, usize>,
    pub workers: BTreeSet<String>,
    pub banned: BTreeSet<String>,
    /// Assignment-to-report times of accepted reports, seconds.
    pub durations: Vec<u64>,
    pub solutions: BTreeSet<Solution>,
}

impl CoordinatorState {
    pub fn new(config: CoordinatorConfig) -> Self {
        let units: Vec<UnitState> = partition(config.bound, config.p, config.chunk, config.flags)
            .into_iter()
            .map(|unit| UnitState {
                unit,
                assignments: Vec::new(),
                reports: Vec::new(),
                validated: None,
            })
            .collect();
        let index = units.iter().enumerate().map(|(i, u)| (u.unit.id.clone(), i)).collect();
        CoordinatorState {
            config,
            units,
            index,
            workers: BTreeSet::new(),
            banned: BTreeSet::new(),
            durations: Vec::new(),
            solutions: BTreeSet::new(),
        }
    }

    fn unit_index(&self, id: &str) -> Result<usize, WorknetError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| WorknetError::UnknownUnit(id.to_string()))
    }

    /// Deadline length: ten times the median observed unit time, at least
    /// [`MIN_DEADLINE_SECS`].
    pub fn deadline_secs(&self) -> u64 {
        if self.durations.is_empty() {
            return MIN_DEADLINE_SECS;
        }
        let mut d = self.durations.clone();
        d.sort_unstable();
        (10 * d[d.len() / 2]).max(MIN_DEADLINE_SECS)
    }

    /// Applies one event. Events are assumed valid; replay of a journal
    /// written by [`Coordinator`] never fails here.
    pub fn apply(&mut self, ev: &Event) -> Result<(), WorknetError> {
        match ev {
            Event::Open { .. } => {}
            Event::Assign {
                t,
                unit,
                worker,
                deadline,
            } => {
                let i = self.unit_index(unit)?;
                self.workers.insert(worker.clone());
                self.units[i].assignments.push(Assignment {
                    worker: worker.clone(),
                    assigned_at: *t,
                    deadline: *deadline,
                    open: true,
                });
            }
            Event::Report {
                t,
                unit,
                worker,
                digest,
                solutions,
                stats,
            } => {
                let i = self.unit_index(unit)?;
                let digest = parse_digest(digest).ok_or_else(|| WorknetError::BadDigest(digest.clone()))?;
                let solutions = solutions
                    .iter()
                    .map(|s| s.to_solution())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| WorknetError::Journal(e.to_string()))?;
                let u = &mut self.units[i];
                let a = u.open_assignment(worker).ok_or_else(|| WorknetError::NotAssigned {
                    unit: unit.clone(),
                    worker: worker.clone(),
                })?;
                u.assignments[a].open = false;
                self.durations.push(t.saturating_sub(u.assignments[a].assigned_at));
                u.reports.push(Report {
                    worker: worker.clone(),
                    digest,
                    solutions,
                    stats: *stats,
                    t: *t,
                });
            }
            Event::Reject { unit, worker, .. } => {
                let i = self.unit_index(unit)?;
                let u = &mut self.units[i];
                if let Some(a) = u.open_assignment(worker) {
                    u.assignments[a].open = false;
                }
                self.banned.insert(worker.clone());
            }
            Event::Validate { unit, digest, .. } => {
                let i = self.unit_index(unit)?;
                let digest = parse_digest(digest).ok_or_else(|| WorknetError::BadDigest(digest.clone()))?;
                let u = &mut self.units[i];
                let agreed =
                    u.reports.iter().find(|r| r.digest == digest).ok_or_else(|| {
                        WorknetError::Journal(format!("validate of {unit} without a matching report"))
                    })?;
                self.solutions.extend(agreed.solutions.iter().copied());
                u.validated = Some(digest);
                for a in &mut u.assignments {
                    a.open = false;
                }
            }
        }
        Ok(())
    }

    /// Digest that has reached quorum on an unvalidated unit, if any.
    fn quorum_digest(&self, i: usize) -> Option<u64> {
        let u = &self.units[i];
        if u.validated.is_some() {
            return None;
        }
        u.best_group()
            .filter(|&(_, n)| n >= self.config.quorum as usize)
            .map(|(d, _)| d)
    }

    pub fn status(&self, now: u64) -> StatusMsg {
        let mut msg = StatusMsg {
            units: self.units.len(),
            pending: 0,
            assigned: 0,
            validated: 0,
            inconclusive: 0,
            solutions: self.solutions.len(),
        };
        for u in &self.units {
            match u.status(self.config.quorum, now) {
                UnitStatus::Pending => msg.pending += 1,
                UnitStatus::Assigned => msg.assigned += 1,
                UnitStatus::Validated => msg.validated += 1,
                UnitStatus::Inconclusive => msg.inconclusive += 1,
            }
        }
        msg
    }

    /// Open assignments as `(unit id, worker)`, for comparing states.
    pub fn outstanding(&self) -> Vec<(String, String)> {
        self.units
            .iter()
            .flat_map(|u| {
                u.assignments
                    .iter()
                    .filter(|a| a.open)
                    .map(move |a| (u.unit.id.clone(), a.worker.clone()))
            })
            .collect()
    }

    pub fn validated_units(&self) -> Vec<String> {
        self.units
            .iter()
            .filter(|u| u.validated.is_some())
            .map(|u| u.unit.id.clone())
            .collect()
    }
}

#[derive(Debug)]
pub struct Coordinator {
    state: CoordinatorState,
    journal: Option<Journal>,
}

impl Coordinator {
    /// A coordinator without persistence.
    pub fn in_memory(config: CoordinatorConfig) -> Result<Self, WorknetError> {
        check_config(&config)?;
        Ok(Coordinator {
            state: CoordinatorState::new(config),
            journal: None,
        })
    }

    /// Opens the journal at `path`, replaying it if it has content. The
    /// configuration must match the one the journal was started with.
    pub fn open(config: CoordinatorConfig, path: &Path, now: u64) -> Result<Self, WorknetError> {
        check_config(&config)?;
        let (mut journal, events) = Journal::open(path)?;
        let opened = open_event(&config, now);
        let state = if events.is_empty() {
            journal.append(&opened)?;
            CoordinatorState::new(config)
        } else {
            let state = replay(&events)?;
            if state.config != config {
                return Err(WorknetError::Config(format!(
                    "journal {} was started with {:?}, not {:?}",
                    path.display(),
                    state.config,
                    config
                )));
            }
            state
        };
        let mut coord = Coordinator {
            state,
            journal: Some(journal),
        };
        coord.reconcile(now)?;
        Ok(coord)
    }

    /// Reopens an existing journal using the configuration stored in it.
    pub fn recover(path: &Path, now: u64) -> Result<Self, WorknetError> {
        let (journal, events) = Journal::open(path)?;
        let state = replay(&events)?;
        let mut coord = Coordinator {
            state,
            journal: Some(journal),
        };
        coord.reconcile(now)?;
        Ok(coord)
    }

    pub fn state(&self) -> &CoordinatorState {
        &self.state
    }

    pub fn config(&self) -> &CoordinatorConfig {
        &self.state.config
    }

    fn record(&mut self, ev: Event) -> Result<(), WorknetError> {
        if let Some(j) = self.journal.as_mut() {
            j.append(&ev)?;
        }
        self.state.apply(&ev)
    }

    // Finishes validations whose report was journaled but whose validate
    // record was lost to a crash.
    fn reconcile(&mut self, now: u64) -> Result<(), WorknetError> {
        for i in 0..self.state.units.len() {
            if let Some(d) = self.state.quorum_digest(i) {
                let unit = self.state.units[i].unit.id.clone();
                self.record(Event::Validate {
                    t: now,
                    unit,
                    digest: format_digest(d),
                })?;
            }
        }
        Ok(())
    }

    /// Hands out the unit closest to quorum that this worker has neither
    /// reported nor currently holds; ties go to the lowest `rp_begin`.
    pub fn fetch(&mut self, worker: &str, now: u64) -> Result<Option<Workunit>, WorknetError> {
        if !valid_worker_id(worker) {
            return Err(WorknetError::InvalidWorker(worker.to_string()));
        }
        if self.state.banned.contains(worker) {
            return Err(WorknetError::Banned(worker.to_string()));
        }
        let quorum = self.state.config.quorum;
        let pick = self
            .state
            .units
            .iter()
            .enumerate()
            .filter(|(_, u)| u.validated.is_none() && u.open_assignment(worker).is_none() && !u.has_reported(worker))
            .filter_map(|(i, u)| {
                let remaining = u.reports_needed(quorum).saturating_sub(u.active_assignments(now));
                (remaining > 0).then_some((remaining, u.unit.rp_begin, i))
            })
            .min();
        let Some((_, _, i)) = pick else {
            return Ok(None);
        };
        let unit = self.state.units[i].unit.clone();
        let deadline = now + self.state.deadline_secs();
        self.record(Event::Assign {
            t: now,
            unit: unit.id.clone(),
            worker: worker.to_string(),
            deadline,
        })?;
        Ok(Some(unit))
    }

    /// Records a worker's result. Reports whose solutions do not verify are
    /// rejected and the worker is banned.
    pub fn submit(
        &mut self,
        worker: &str,
        unit_id: &str,
        digest: &str,
        solutions: &[SolutionJson],
        stats: StatsMsg,
        now: u64,
    ) -> Result<SubmitStatus, WorknetError> {
        if !self.state.workers.contains(worker) {
            return Err(WorknetError::UnknownWorker(worker.to_string()));
        }
        let i = self.state.unit_index(unit_id)?;
        if parse_digest(digest).is_none() {
            return Err(WorknetError::BadDigest(digest.to_string()));
        }
        if self.state.units[i].open_assignment(worker).is_none() {
            return Err(WorknetError::NotAssigned {
                unit: unit_id.to_string(),
                worker: worker.to_string(),
            });
        }
        if let Err(reason) = self.check_solutions(solutions) {
            log::warn!("rejecting report of {unit_id} from {worker}: {reason}");
            self.record(Event::Reject {
                t: now,
                unit: unit_id.to_string(),
                worker: worker.to_string(),
                reason,
            })?;
            return Ok(SubmitStatus::Rejected);
        }
        self.record(Event::Report {
            t: now,
            unit: unit_id.to_string(),
            worker: worker.to_string(),
            digest: digest.to_ascii_lowercase(),
            solutions: solutions.to_vec(),
            stats,
        })?;
        if let Some(d) = self.state.quorum_digest(i) {
            self.record(Event::Validate {
                t: now,
                unit: unit_id.to_string(),
                digest: format_digest(d),
            })?;
            return Ok(SubmitStatus::Validated);
        }
        Ok(SubmitStatus::Accepted)
    }

    fn check_solutions(&self, solutions: &[SolutionJson]) -> Result<(), String> {
        let cfg = &self.state.config;
        for s in solutions {
            let sol = s.to_solution().map_err(|e| e.to_string())?;
            if sol.max_term() > cfg.bound {
                return Err(format!("{sol} exceeds bound {}", cfg.bound));
            }
            if sol.is_trivial() {
                return Err(format!("{sol} is trivial"));
            }
            if !sol.is_primitive() && !cfg.flags.include_imprimitive {
                return Err(format!("{sol} is not primitive"));
            }
        }
        Ok(())
    }

    pub fn status(&self, now: u64) -> StatusMsg {
        self.state.status(now)
    }

    /// Union of the agreed solutions of all validated units, sorted.
    pub fn solutions(&self) -> Vec<Solution> {
        self.state.solutions.iter().copied().collect()
    }

    pub fn is_complete(&self) -> bool {
        self.state.units.iter().all(|u| u.validated.is_some())
    }
}

fn check_config(c: &CoordinatorConfig) -> Result<(), WorknetError> {
    if c.chunk == 0 || c.quorum == 0 || c.p == 0 || c.bound == 0 {
        return Err(WorknetError::Config(
            "bound, prime, chunk and quorum must all be positive".into(),
        ));
    }
    Ok(())
}

fn open_event(c: &CoordinatorConfig, now: u64) -> Event {
    Event::Open {
        t: now,
        version: JOURNAL_VERSION,
        n: c.bound,
        p: c.p,
        chunk: c.chunk,
        quorum: c.quorum,
        flags: c.flags.bits(),
    }
}

/// Rebuilds coordinator state from a journal's events.
pub fn replay(events: &[Event]) -> Result<CoordinatorState, WorknetError> {
    let Some(Event::Open {
        version,
        n,
        p,
        chunk,
        quorum,
        flags,
        ..
    }) = events.first()
    else {
        return Err(WorknetError::Journal(
            "journal does not start with an open record".into(),
        ));
    };
    if *version != JOURNAL_VERSION {
        return Err(WorknetError::Journal(format!("unsupported journal version {version}")));
    }
    let config = CoordinatorConfig {
        bound: *n,
        p: *p,
        chunk: *chunk,
        quorum: *quorum,
        flags: SearchFlags::from_bits(*flags),
    };
    check_config(&config)?;
    let mut state = CoordinatorState::new(config);
    for ev in &events[1..] {
        state.apply(ev)?;
    }
    Ok(state)
}

impl From<&Workunit> for WorkunitMsg {
    fn from(u: &Workunit) -> Self {
        WorkunitMsg {
            id: u.id.clone(),
            n: u.bound,
            p: u.p,
            rp_begin: u.rp_begin,
            rp_end: u.rp_end,
            flags: u.flags.into(),
        }
    }
}
