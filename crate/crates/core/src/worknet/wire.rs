//! JSON messages exchanged between coordinator and workers.

use serde::{Deserialize, Serialize};

use crate::catalog::SolutionJson;
use crate::engine::SearchFlags;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagsMsg {
    pub t_filter: bool,
    pub include_imprimitive: bool,
}

impl From<SearchFlags> for FlagsMsg {
    fn from(f: SearchFlags) -> Self {
        FlagsMsg {
            t_filter: f.t_filter,
            include_imprimitive: f.include_imprimitive,
        }
    }
}

impl From<FlagsMsg> for SearchFlags {
    fn from(f: FlagsMsg) -> Self {
        SearchFlags {
            t_filter: f.t_filter,
            include_imprimitive: f.include_imprimitive,
        }
    }
}

/// Body of `GET /v1/work`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkunitMsg {
    pub id: String,
    pub n: u32,
    pub p: u32,
    pub rp_begin: u32,
    pub rp_end: u32,
    pub flags: FlagsMsg,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsMsg {
    pub pairs: u64,
    pub probes: u64,
    pub hits: u64,
}

/// Body of `POST /v1/result`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultMsg {
    pub id: String,
    pub worker_id: String,
    pub digest: String,
    pub solutions: Vec<SolutionJson>,
    pub stats: StatsMsg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubmitStatus {
    Accepted,
    Validated,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitReply {
    pub status: SubmitStatus,
}

/// Body of `GET /v1/status`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusMsg {
    pub units: usize,
    pub pending: usize,
    pub assigned: usize,
    pub validated: usize,
    pub inconclusive: usize,
    pub solutions: usize,
}

impl StatusMsg {
    pub fn all_validated(&self) -> bool {
        self.validated == self.units
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorMsg {
    pub error: String,
}
