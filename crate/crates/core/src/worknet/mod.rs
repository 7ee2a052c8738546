//! Redundant distributed search: a coordinator hands out residue ranges,
//! workers compute them with the engine, and a unit counts as done once
//! enough distinct workers report the same digest.

pub mod coordinator;
pub mod journal;
pub mod server;
pub mod wire;
pub mod worker;

use thiserror::Error;

use crate::engine::{EngineError, SearchFlags};

pub use coordinator::{Coordinator, CoordinatorConfig, CoordinatorState, UnitStatus};
pub use server::Server;
pub use wire::{ResultMsg, StatsMsg, StatusMsg, SubmitStatus, WorkunitMsg};
pub use worker::{worker_loop, WorkerOptions, WorkerSummary};

#[derive(Debug, Error)]
pub enum WorknetError {
    #[error("invalid worker id {0:?}")]
    InvalidWorker(String),
    #[error("worker {0} is banned")]
    Banned(String),
    #[error("unknown worker {0}")]
    UnknownWorker(String),
    #[error("unknown workunit {0}")]
    UnknownUnit(String),
    #[error("digest {0:?} is not 16 hex digits")]
    BadDigest(String),
    #[error("workunit {unit} is not assigned to {worker}")]
    NotAssigned { unit: String, worker: String },
    #[error("journal: {0}")]
    Journal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("network: {0}")]
    Network(String),
    #[error("server answered {status}: {body}")]
    Http { status: u16, body: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workunit {
    pub id: String,
    pub bound: u32,
    pub p: u32,
    pub rp_begin: u32,
    pub rp_end: u32,
    pub flags: SearchFlags,
}

impl From<WorkunitMsg> for Workunit {
    fn from(m: WorkunitMsg) -> Self {
        Workunit {
            id: m.id,
            bound: m.n,
            p: m.p,
            rp_begin: m.rp_begin,
            rp_end: m.rp_end,
            flags: m.flags.into(),
        }
    }
}

/// Splits `[0, p)` into consecutive ranges of `chunk` residues; the last
/// one may be shorter.
pub fn partition(bound: u32, p: u32, chunk: u32, flags: SearchFlags) -> Vec<Workunit> {
    let chunk = chunk.max(1);
    (0..p.div_ceil(chunk))
        .map(|i| {
            let rp_begin = i * chunk;
            let rp_end = rp_begin.saturating_add(chunk).min(p);
            Workunit {
                id: format!("n{bound}-p{p}-{rp_begin}-{rp_end}"),
                bound,
                p,
                rp_begin,
                rp_end,
                flags,
            }
        })
        .collect()
}

/// Worker ids are 1 to 64 characters from `[A-Za-z0-9._-]`.
pub fn valid_worker_id(id: &str) -> bool {
    (1..=64).contains(&id.len())
        && id
            .bytes()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, b'.' | b'_' | b'-'))
}
