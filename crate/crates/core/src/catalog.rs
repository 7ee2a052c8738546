//! Canonical solutions, the appendix text format, and set comparison.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numthy::{gcd_all, sixth, Wide128, MAX_TERM};

/// The bundled list of the 377 known primitive solutions with all terms
/// below 250000, in appendix layout.
pub const BUNDLED_APPENDIX: &str = include_str!("../data/appendix.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("term {0} exceeds the supported maximum {MAX_TERM}")]
    TermOutOfRange(u32),
    #[error("{0:?} does not satisfy a^6+b^6 = c^6+d^6+e^6+f^6+g^6")]
    NotASolution([u32; 7]),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A solution with the two left terms descending and the five right terms
/// descending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Solution {
    terms: [u32; 7],
    primitive: bool,
    trivial: bool,
}

impl Solution {
    /// Sorts each side descending and classifies the tuple. Fails when the
    /// equation does not hold exactly.
    pub fn canonicalize(lhs: [u32; 2], rhs: [u32; 5]) -> Result<Self, CatalogError> {
        let mut terms = [lhs[0], lhs[1], rhs[0], rhs[1], rhs[2], rhs[3], rhs[4]];
        if let Some(&big) = terms.iter().find(|&&t| t > MAX_TERM) {
            return Err(CatalogError::TermOutOfRange(big));
        }
        terms[..2].sort_unstable_by(|x, y| y.cmp(x));
        terms[2..].sort_unstable_by(|x, y| y.cmp(x));
        if lhs_sum(&terms) != rhs_sum(&terms) {
            return Err(CatalogError::NotASolution(terms));
        }
        Ok(Solution {
            terms,
            primitive: gcd_all(&terms).unwrap_or(0) == 1,
            trivial: is_trivial(&terms),
        })
    }

    /// Canonicalizes a flat `(a, b, c, d, e, f, g)` tuple.
    pub fn from_terms(t: [u32; 7]) -> Result<Self, CatalogError> {
        Self::canonicalize([t[0], t[1]], [t[2], t[3], t[4], t[5], t[6]])
    }

    pub fn terms(&self) -> [u32; 7] {
        self.terms
    }

    pub fn lhs(&self) -> [u32; 2] {
        [self.terms[0], self.terms[1]]
    }

    pub fn rhs(&self) -> [u32; 5] {
        [
            self.terms[2],
            self.terms[3],
            self.terms[4],
            self.terms[5],
            self.terms[6],
        ]
    }

    pub fn is_primitive(&self) -> bool {
        self.primitive
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    pub fn max_term(&self) -> u32 {
        self.terms.iter().copied().max().unwrap_or(0)
    }

    /// `k` times every term; `None` when a term would leave the supported range.
    pub fn scaled(&self, k: u32) -> Option<Self> {
        let mut t = [0u32; 7];
        for (dst, src) in t.iter_mut().zip(self.terms) {
            *dst = src.checked_mul(k).filter(|&v| v <= MAX_TERM)?;
        }
        Self::from_terms(t).ok()
    }

    /// Appendix notation, `A^6+B^6=C^6+D^6+E^6+F^6+G^6`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&SolutionJson::from(self)).expect("plain struct serializes")
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.terms;
        write!(
            f,
            "{}^6+{}^6={}^6+{}^6+{}^6+{}^6+{}^6",
            t[0], t[1], t[2], t[3], t[4], t[5], t[6]
        )
    }
}

fn lhs_sum(t: &[u32; 7]) -> Wide128 {
    sixth(t[0]) + sixth(t[1])
}

fn rhs_sum(t: &[u32; 7]) -> Wide128 {
    t[2..].iter().map(|&x| sixth(x)).sum()
}

// Nonzero terms of the two sides form the same multiset.
fn is_trivial(t: &[u32; 7]) -> bool {
    let mut left: Vec<u32> = t[..2].iter().copied().filter(|&x| x != 0).collect();
    let mut right: Vec<u32> = t[2..].iter().copied().filter(|&x| x != 0).collect();
    left.sort_unstable();
    right.sort_unstable();
    left == right
}

/// Wire and file form of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionJson {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
    pub e: u32,
    pub f: u32,
    pub g: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive: Option<bool>,
}

impl From<&Solution> for SolutionJson {
    fn from(s: &Solution) -> Self {
        let [a, b, c, d, e, f, g] = s.terms;
        SolutionJson {
            a,
            b,
            c,
            d,
            e,
            f,
            g,
            primitive: Some(s.primitive),
        }
    }
}

impl SolutionJson {
    pub fn terms(&self) -> [u32; 7] {
        [self.a, self.b, self.c, self.d, self.e, self.f, self.g]
    }

    pub fn to_solution(&self) -> Result<Solution, CatalogError> {
        Solution::from_terms(self.terms())
    }

    /// Same terms without the classification flag, as sent over the wire.
    pub fn bare(s: &Solution) -> Self {
        SolutionJson {
            primitive: None,
            ..SolutionJson::from(s)
        }
    }
}

/// One outcome of [`verify`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks a tuple taken at face value: the exact equation, every term
/// strictly below `bound`, and the canonical ordering of both sides.
pub fn verify_terms(t: [u32; 7], bound: u32) -> VerifyReport {
    let mut checks = Vec::with_capacity(4);
    let in_range = t.iter().all(|&x| x <= MAX_TERM);
    let equation = in_range && lhs_sum(&t) == rhs_sum(&t);
    checks.push(Check {
        name: "equation",
        passed: equation,
        detail: if !in_range {
            format!("term above {MAX_TERM}")
        } else if equation {
            "exact".into()
        } else {
            format!("lhs {} != rhs {}", lhs_sum(&t), rhs_sum(&t))
        },
    });
    let max = t.iter().copied().max().unwrap_or(0);
    checks.push(Check {
        name: "bound",
        passed: max < bound,
        detail: format!("max term {max}, bound {bound}"),
    });
    checks.push(Check {
        name: "lhs_order",
        passed: t[0] >= t[1],
        detail: format!("{} >= {}", t[0], t[1]),
    });
    checks.push(Check {
        name: "rhs_order",
        passed: t[2..].windows(2).all(|w| w[0] >= w[1]),
        detail: format!("{:?}", &t[2..]),
    });
    VerifyReport { checks }
}

pub fn verify(s: &Solution, bound: u32) -> VerifyReport {
    verify_terms(s.terms, bound)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub index: usize,
    pub solution: Solution,
    pub discoverer: String,
}

/// Parses the appendix layout: a numbered equation line followed by a line
/// holding the discoverer in parentheses.
pub fn parse_catalog(text: &str) -> Result<Vec<CatalogEntry>, CatalogError> {
    let mut entries = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    while let Some((line, eq)) = lines.next() {
        let err = |msg: String| CatalogError::Parse { line, msg };
        let (index, terms) = parse_equation_line(eq).map_err(err)?;
        if index != entries.len() + 1 {
            return Err(CatalogError::Parse {
                line,
                msg: format!("expected entry {}, found {index}", entries.len() + 1),
            });
        }
        let (name_line, name) = lines.next().ok_or_else(|| CatalogError::Parse {
            line,
            msg: "missing discoverer line".into(),
        })?;
        let discoverer = parse_name_line(name).ok_or_else(|| CatalogError::Parse {
            line: name_line,
            msg: format!("expected '(name)', found {name:?}"),
        })?;
        let solution = Solution::from_terms(terms).map_err(|e| CatalogError::Parse {
            line,
            msg: e.to_string(),
        })?;
        entries.push(CatalogEntry {
            index,
            solution,
            discoverer: discoverer.to_string(),
        });
    }
    Ok(entries)
}

fn parse_equation_line(line: &str) -> Result<(usize, [u32; 7]), String> {
    let (num, eq) = line
        .split_once('.')
        .ok_or_else(|| format!("expected '<k>. <equation>', found {line:?}"))?;
    let index: usize = num.trim().parse().map_err(|_| format!("bad entry number {num:?}"))?;
    Ok((index, parse_equation(eq)?))
}

fn parse_equation(eq: &str) -> Result<[u32; 7], String> {
    let (lhs, rhs) = eq
        .trim()
        .split_once('=')
        .ok_or_else(|| "equation has no '='".to_string())?;
    let side = |s: &str, want: usize| -> Result<Vec<u32>, String> {
        let terms: Vec<u32> = s
            .split('+')
            .map(|t| {
                t.trim()
                    .strip_suffix("^6")
                    .ok_or_else(|| format!("term {t:?} lacks ^6"))?
                    .parse::<u32>()
                    .map_err(|_| format!("bad term {t:?}"))
            })
            .collect::<Result<_, _>>()?;
        if terms.len() != want {
            return Err(format!("expected {want} terms, found {}", terms.len()));
        }
        Ok(terms)
    };
    let l = side(lhs, 2)?;
    let r = side(rhs, 5)?;
    Ok([l[0], l[1], r[0], r[1], r[2], r[3], r[4]])
}

/// Reads tuples at face value from any of the formats this crate writes:
/// JSON lines, bare `A^6+B^6=...` lines, or the numbered appendix layout
/// (whose parenthesized name lines are skipped). Nothing is reordered or
/// checked beyond syntax.
pub fn parse_terms_any(text: &str) -> Result<Vec<[u32; 7]>, CatalogError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('(') || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| CatalogError::Parse { line: i + 1, msg };
        let terms = if line.starts_with('{') {
            serde_json::from_str::<SolutionJson>(line)
                .map_err(|e| err(e.to_string()))?
                .terms()
        } else {
            let eq = match line.split_once('.') {
                Some((num, rest)) if num.trim().bytes().all(|c| c.is_ascii_digit()) => rest,
                _ => line,
            };
            parse_equation(eq).map_err(err)?
        };
        out.push(terms);
    }
    Ok(out)
}

// Text between the first '(' and the last ')'.
fn parse_name_line(line: &str) -> Option<&str> {
    let line = line.trim();
    if !line.starts_with('(') || !line.ends_with(')') || line.len() < 2 {
        return None;
    }
    Some(&line[1..line.len() - 1])
}

/// Writes entries back in appendix layout.
pub fn serialize_catalog(entries: &[CatalogEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let prefix = format!("{}. ", e.index);
        out.push_str(&prefix);
        out.push_str(&e.solution.to_text());
        out.push('\n');
        out.push_str(&" ".repeat(prefix.len()));
        out.push('(');
        out.push_str(&e.discoverer);
        out.push_str(")\n");
    }
    out
}

/// The bundled appendix, parsed.
pub fn bundled() -> Vec<CatalogEntry> {
    parse_catalog(BUNDLED_APPENDIX).expect("bundled appendix parses")
}

/// Ascending by `(a, b, c, d, e, f, g)`.
pub fn sort_lex(solutions: &mut [Solution]) {
    solutions.sort_unstable_by_key(|s| s.terms);
}

pub fn is_lex_sorted(solutions: &[Solution]) -> bool {
    solutions.windows(2).all(|w| w[0].terms <= w[1].terms)
}

/// `(missing, extra)`: expected but not found, found but not expected.
pub fn diff(found: &[Solution], expected: &[Solution]) -> (Vec<Solution>, Vec<Solution>) {
    let f: BTreeSet<[u32; 7]> = found.iter().map(|s| s.terms).collect();
    let e: BTreeSet<[u32; 7]> = expected.iter().map(|s| s.terms).collect();
    let pick = |keys: Vec<&[u32; 7]>, pool: &[Solution]| -> Vec<Solution> {
        keys.into_iter()
            .filter_map(|k| pool.iter().find(|s| &s.terms == k).copied())
            .collect()
    };
    let missing = pick(e.difference(&f).collect(), expected);
    let extra = pick(f.difference(&e).collect(), found);
    (missing, extra)
}
