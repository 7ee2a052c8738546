//! Append-only JSON-lines event log backing the coordinator.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::SolutionJson;

use super::wire::StatsMsg;
use super::WorknetError;

pub const JOURNAL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "ev", rename_all = "lowercase")]
pub enum Event {
    /// First record: the coordinator configuration.
    Open {
        t: u64,
        version: u32,
        n: u32,
        p: u32,
        chunk: u32,
        quorum: u32,
        flags: u32,
    },
    Assign {
        t: u64,
        unit: String,
        worker: String,
        deadline: u64,
    },
    Report {
        t: u64,
        unit: String,
        worker: String,
        digest: String,
        solutions: Vec<SolutionJson>,
        stats: StatsMsg,
    },
    /// A report that failed verification; the worker is banned.
    Reject {
        t: u64,
        unit: String,
        worker: String,
        reason: String,
    },
    Validate {
        t: u64,
        unit: String,
        digest: String,
    },
}

#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: File,
}

impl Journal {
    /// Opens (or creates) the journal and returns the complete events in it.
    /// A torn final line is cut off; a malformed line elsewhere is an error.
    pub fn open(path: &Path) -> Result<(Journal, Vec<Event>), WorknetError> {
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;
        let (events, good_len) = parse_events(&text)?;
        if good_len < text.len() {
            log::warn!(
                "journal {}: discarding {} bytes of torn trailing record",
                path.display(),
                text.len() - good_len
            );
            file.set_len(good_len as u64)?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok((
            Journal {
                path: path.to_path_buf(),
                file,
            },
            events,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one event and syncs it before returning.
    pub fn append(&mut self, ev: &Event) -> Result<(), WorknetError> {
        let mut line = serde_json::to_string(ev).map_err(|e| WorknetError::Journal(e.to_string()))?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.sync_data()?;
        Ok(())
    }
}

/// Complete events and the byte length they cover.
pub fn parse_events(text: &str) -> Result<(Vec<Event>, usize), WorknetError> {
    let mut events = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let rest = &text[pos..];
        let Some(end) = rest.find('\n') else {
            // Unterminated tail: a write that never finished.
            break;
        };
        let line = &rest[..end];
        match serde_json::from_str::<Event>(line) {
            Ok(ev) => events.push(ev),
            Err(e) => {
                if pos + end + 1 == text.len() {
                    // A terminated but unparseable last line is also a torn write.
                    break;
                }
                return Err(WorknetError::Journal(format!(
                    "record {} at byte {pos}: {e}",
                    events.len() + 1
                )));
            }
        }
        pos += end + 1;
    }
    Ok((events, pos))
}
