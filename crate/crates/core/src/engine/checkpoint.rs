//! Append-only checkpoint of completed `r_p` units.
//!
//! ```text
//! EULERSIEVE-CKPT v1 N=<n> p=<p> flags=<hex>
//! rp=<r> digest=<16 hex> solutions=<k>
//! S a,b,c,d,e,f,g            (k lines)
//! ```
//!
//! A unit counts only once its header line and all `k` solution lines are
//! present and newline-terminated; anything after the last complete unit is
//! cut off when the file is reopened.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::catalog::Solution;

use super::digest::{format_digest, parse_digest};
use super::EngineError;

const MAGIC: &str = "EULERSIEVE-CKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckpointHeader {
    pub bound: u32,
    pub p: u32,
    pub flags: u32,
}

impl CheckpointHeader {
    fn line(&self) -> String {
        format!(
            "{MAGIC} v{VERSION} N={} p={} flags={:x}\n",
            self.bound, self.p, self.flags
        )
    }

    fn parse(line: &str) -> Option<Self> {
        let mut parts = line.split_whitespace();
        if parts.next()? != MAGIC || parts.next()? != format!("v{VERSION}") {
            return None;
        }
        let bound = parts.next()?.strip_prefix("N=")?.parse().ok()?;
        let p = parts.next()?.strip_prefix("p=")?.parse().ok()?;
        let flags = u32::from_str_radix(parts.next()?.strip_prefix("flags=")?, 16).ok()?;
        if parts.next().is_some() {
            return None;
        }
        Some(CheckpointHeader { bound, p, flags })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletedUnit {
    pub digest: u64,
    pub solutions: Vec<Solution>,
}

#[derive(Debug)]
pub struct Checkpoint {
    header: CheckpointHeader,
    completed: BTreeMap<u32, CompletedUnit>,
    file: File,
}

impl Checkpoint {
    /// Opens or creates the checkpoint at `path`. An existing file must carry
    /// the same header; a torn trailing unit is discarded.
    pub fn open(path: &Path, header: CheckpointHeader) -> Result<Self, EngineError> {
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;
        if text.is_empty() {
            file.write_all(header.line().as_bytes())?;
            file.sync_data()?;
            return Ok(Checkpoint {
                header,
                completed: BTreeMap::new(),
                file,
            });
        }
        let (found, completed, good_len) = replay(&text)?;
        if found != header {
            return Err(EngineError::CheckpointMismatch {
                expected: header.line().trim_end().to_string(),
                found: found.line().trim_end().to_string(),
            });
        }
        if good_len < text.len() {
            log::warn!(
                "checkpoint {}: discarding {} bytes of incomplete trailing unit",
                path.display(),
                text.len() - good_len
            );
            file.set_len(good_len as u64)?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok(Checkpoint {
            header,
            completed,
            file,
        })
    }

    pub fn header(&self) -> CheckpointHeader {
        self.header
    }

    pub fn completed(&self) -> &BTreeMap<u32, CompletedUnit> {
        &self.completed
    }

    /// Appends one unit and flushes it to disk.
    pub fn append(&mut self, r_p: u32, digest: u64, solutions: &[Solution]) -> io::Result<()> {
        let mut rec = format!(
            "rp={r_p} digest={} solutions={}\n",
            format_digest(digest),
            solutions.len()
        );
        for s in solutions {
            let t = s.terms();
            rec.push_str(&format!(
                "S {},{},{},{},{},{},{}\n",
                t[0], t[1], t[2], t[3], t[4], t[5], t[6]
            ));
        }
        self.file.write_all(rec.as_bytes())?;
        self.file.sync_data()?;
        self.completed.insert(
            r_p,
            CompletedUnit {
                digest,
                solutions: solutions.to_vec(),
            },
        );
        Ok(())
    }
}

/// Parses checkpoint text, returning the header, the complete units, and the
/// byte length covered by them.
pub fn replay(text: &str) -> Result<(CheckpointHeader, BTreeMap<u32, CompletedUnit>, usize), EngineError> {
    let corrupt = |msg: String| EngineError::CheckpointCorrupt(msg);
    let mut pos = 0;
    // Only newline-terminated lines count.
    let next_line = |pos: &mut usize| -> Option<&str> {
        let rest = &text[*pos..];
        let end = rest.find('\n')?;
        *pos += end + 1;
        Some(&rest[..end])
    };
    let first = next_line(&mut pos).ok_or_else(|| corrupt("missing header line".into()))?;
    let header = CheckpointHeader::parse(first).ok_or_else(|| corrupt(format!("bad header {first:?}")))?;
    let mut completed = BTreeMap::new();
    let mut good = pos;
    'units: while let Some(line) = next_line(&mut pos) {
        let Some((r_p, digest, count)) = parse_unit_line(line) else {
            break;
        };
        let mut solutions = Vec::with_capacity(count);
        for _ in 0..count {
            let Some(sline) = next_line(&mut pos) else {
                break 'units;
            };
            let Some(sol) = parse_solution_line(sline) else {
                break 'units;
            };
            solutions.push(sol);
        }
        completed.insert(r_p, CompletedUnit { digest, solutions });
        good = pos;
    }
    if good < text.len() && text[good..].contains('\n') && next_complete_garbage(&text[good..]) {
        return Err(corrupt(format!("unparseable record at byte {good}")));
    }
    Ok((header, completed, good))
}

// A malformed record followed by further complete lines is corruption, not a
// torn write.
fn next_complete_garbage(rest: &str) -> bool {
    let complete_lines = rest.matches('\n').count();
    let first_unit_lines = rest
        .lines()
        .next()
        .and_then(parse_unit_line)
        .map(|(_, _, k)| k + 1)
        .unwrap_or(1);
    complete_lines > first_unit_lines
}

fn parse_unit_line(line: &str) -> Option<(u32, u64, usize)> {
    let mut parts = line.split(' ');
    let r_p = parts.next()?.strip_prefix("rp=")?.parse().ok()?;
    let digest = parse_digest(parts.next()?.strip_prefix("digest=")?)?;
    let count = parts.next()?.strip_prefix("solutions=")?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((r_p, digest, count))
}

fn parse_solution_line(line: &str) -> Option<Solution> {
    let body = line.strip_prefix("S ")?;
    let terms: Vec<u32> = body.split(',').map(|t| t.parse().ok()).collect::<Option<_>>()?;
    let terms: [u32; 7] = terms.try_into().ok()?;
    Solution::from_terms(terms).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> CheckpointHeader {
        CheckpointHeader {
            bound: 1200,
            p: 929,
            flags: 1,
        }
    }

    fn first() -> Solution {
        Solution::from_terms([1117, 770, 1092, 861, 602, 212, 84]).unwrap()
    }

    #[test]
    fn append_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck");
        {
            let mut ck = Checkpoint::open(&path, header()).unwrap();
            ck.append(3, 0xdead, &[]).unwrap();
            ck.append(7, 0xbeef, &[first()]).unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "EULERSIEVE-CKPT v1 N=1200 p=929 flags=1\n\
             rp=3 digest=000000000000dead solutions=0\n\
             rp=7 digest=000000000000beef solutions=1\n\
             S 1117,770,1092,861,602,212,84\n"
        );
        let ck = Checkpoint::open(&path, header()).unwrap();
        assert_eq!(ck.completed().len(), 2);
        assert_eq!(ck.completed()[&7].solutions, vec![first()]);
        assert_eq!(ck.completed()[&3].digest, 0xdead);
    }

    #[test]
    fn header_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck");
        drop(Checkpoint::open(&path, header()).unwrap());
        let other = CheckpointHeader { p: 937, ..header() };
        assert!(matches!(
            Checkpoint::open(&path, other),
            Err(EngineError::CheckpointMismatch { .. })
        ));
    }

    #[test]
    fn torn_unit_is_discarded() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck");
        {
            let mut ck = Checkpoint::open(&path, header()).unwrap();
            ck.append(3, 1, &[]).unwrap();
        }
        let good = std::fs::read_to_string(&path).unwrap();
        for tail in [
            "rp=7 digest=0000000000000002 solutions=1\n",
            "rp=7 digest=0000000000000002 solutions=1\nS 1117,770,1092",
            "rp=7 dig",
        ] {
            std::fs::write(&path, format!("{good}{tail}")).unwrap();
            let mut ck = Checkpoint::open(&path, header()).unwrap();
            assert_eq!(ck.completed().keys().copied().collect::<Vec<_>>(), vec![3]);
            ck.append(9, 4, &[]).unwrap();
            drop(ck);
            let ck = Checkpoint::open(&path, header()).unwrap();
            assert_eq!(ck.completed().keys().copied().collect::<Vec<_>>(), vec![3, 9]);
            std::fs::write(&path, &good).unwrap();
        }
    }

    #[test]
    fn mid_file_garbage_is_an_error() {
        let text = "EULERSIEVE-CKPT v1 N=1200 p=929 flags=1\n\
                    garbage\n\
                    rp=3 digest=0000000000000001 solutions=0\n";
        assert!(matches!(replay(text), Err(EngineError::CheckpointCorrupt(_))));
    }
}
