//! Per-search tables: reduced triples for one `r_p` class and pair buckets
//! for one residue class `v` mod 7⁶.
//!
//! A solution with three right-hand terms divisible by 7 splits as
//! `(a⁶+b⁶) − (c⁶+d⁶) = 7⁶·S′` with `S′ = e′⁶+f′⁶+g′⁶` over the reduced triple.
//! Triples are grouped by `S′ mod p`; pairs are grouped by their sum mod 7⁶
//! (the class `v`, shared by both sides) and then by their sum mod `p`.

use crate::numthy::{sixth, Mod7Tables, PrimeModulus, Wide128, M6, M7};

/// A left- or right-hand pair `(a, b)` with `b ≤ a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairRecord {
    pub a: u32,
    pub b: u32,
    /// `a⁶ + b⁶`, exact.
    pub sum: Wide128,
    /// `sum mod p`.
    pub s: u32,
    /// `(sum mod 7⁷) div 7⁶`.
    pub t: u8,
}

/// All admissible pairs of one class `v`, bucketed by `s`.
///
/// Records are stored sorted by `(s, a, b)`, so each bucket is a contiguous
/// slice ordered by `(a, b)`.
#[derive(Debug, Clone)]
pub struct PairBuckets {
    v: u32,
    p: u32,
    records: Vec<PairRecord>,
}

impl PairBuckets {
    pub fn v(&self) -> u32 {
        self.v
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[PairRecord] {
        &self.records
    }

    /// The bucket `T_s`.
    pub fn bucket(&self, s: u32) -> &[PairRecord] {
        let lo = self.records.partition_point(|r| r.s < s);
        let hi = lo + self.records[lo..].partition_point(|r| r.s == s);
        &self.records[lo..hi]
    }

    /// Nonempty buckets in ascending `s`.
    pub fn buckets(&self) -> impl Iterator<Item = (u32, &[PairRecord])> {
        self.records
            .chunk_by(|x, y| x.s == y.s)
            .map(|chunk| (chunk[0].s, chunk))
    }
}

/// Classes `v` that can hold the common left/right residue of a solution:
/// `v mod 7` is the count of terms coprime to 7 on either side, so 1 or 2.
pub fn admissible_classes() -> impl Iterator<Item = u32> {
    (0..M6).filter(|v| matches!(v % 7, 1 | 2))
}

/// Enumerates every pair `b ≤ a ≤ bound` with `a⁶+b⁶ ≡ v (mod 7⁶)`, not both
/// divisible by 7, and buckets it by `s = (a⁶+b⁶) mod p`.
pub fn pairs_for_class(bound: u32, pm: &PrimeModulus, m7: &Mod7Tables, v: u32) -> PairBuckets {
    let p = pm.p();
    let roots6 = m7.roots6();
    let mut records = Vec::new();
    for a in 0..=bound {
        let pa7 = m7.pow7(a);
        let want = (v + M6 - pa7 % M6) % M6;
        for &root in roots6.roots(want) {
            let mut b = root;
            while b <= a {
                if a % 7 != 0 || b % 7 != 0 {
                    let s = (pm.pow6(a) + pm.pow6(b)) % p;
                    let t = ((pa7 + m7.pow7(b)) % M7 / M6) as u8;
                    records.push(PairRecord {
                        a,
                        b,
                        sum: sixth(a) + sixth(b),
                        s,
                        t,
                    });
                }
                b += M6;
            }
        }
    }
    records.sort_unstable_by_key(|r| (r.s, r.a, r.b));
    PairBuckets { v, p, records }
}

/// The 7⁷ filter: the left-minus-right t-digit difference mod 7 counts the
/// reduced triple members coprime to 7, so it lies in `{0, 1, 2, 3}`.
#[inline(always)]
pub fn t_compatible(t_lhs: u8, t_rhs: u8) -> bool {
    (t_lhs + 7 - t_rhs) % 7 <= 3
}

/// Filters applied to reduced triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripleFilters {
    /// At least one member even.
    pub parity: bool,
    /// At least one member divisible by 3.
    pub mod3: bool,
}

impl Default for TripleFilters {
    fn default() -> Self {
        TripleFilters {
            parity: true,
            mod3: true,
        }
    }
}

impl TripleFilters {
    pub const NONE: TripleFilters = TripleFilters {
        parity: false,
        mod3: false,
    };

    #[inline(always)]
    pub fn accepts(&self, e: u32, f: u32, g: u32) -> bool {
        (!self.parity || e.is_multiple_of(2) || f.is_multiple_of(2) || g.is_multiple_of(2))
            && (!self.mod3 || e.is_multiple_of(3) || f.is_multiple_of(3) || g.is_multiple_of(3))
    }
}

/// Reduced triple `e′ ≥ f′ ≥ g′` with its exact key `S′`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TripleEntry {
    pub e: u16,
    pub f: u16,
    pub g: u16,
    pub key: Wide128,
}

impl TripleEntry {
    pub fn coords(&self) -> [u32; 3] {
        [u32::from(self.e), u32::from(self.f), u32::from(self.g)]
    }
}

const EMPTY: u32 = u32::MAX;

/// Open-addressing index of reduced triples keyed by `S′`, for one `r_p`.
/// Triples sharing an `S′` are chained.
#[derive(Debug, Clone)]
pub struct TripleTable {
    r_p: u32,
    keys: Vec<Wide128>,
    coords: Vec<[u16; 3]>,
    next: Vec<u32>,
    slots: Vec<u32>,
    mask: usize,
}

#[inline(always)]
fn mix(key: Wide128) -> u64 {
    let mut z = (key as u64) ^ ((key >> 64) as u64).rotate_left(29);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl TripleTable {
    fn from_entries(r_p: u32, entries: Vec<(Wide128, [u16; 3])>) -> Self {
        let cap = (entries.len() * 2).next_power_of_two().max(16);
        let mut table = TripleTable {
            r_p,
            keys: Vec::with_capacity(entries.len()),
            coords: Vec::with_capacity(entries.len()),
            next: Vec::with_capacity(entries.len()),
            slots: vec![EMPTY; cap],
            mask: cap - 1,
        };
        for (key, c) in entries {
            table.insert(key, c);
        }
        table
    }

    fn insert(&mut self, key: Wide128, c: [u16; 3]) {
        let idx = self.keys.len() as u32;
        let mut slot = mix(key) as usize & self.mask;
        loop {
            let head = self.slots[slot];
            if head == EMPTY {
                self.slots[slot] = idx;
                self.next.push(EMPTY);
                break;
            }
            if self.keys[head as usize] == key {
                self.slots[slot] = idx;
                self.next.push(head);
                break;
            }
            slot = (slot + 1) & self.mask;
        }
        self.keys.push(key);
        self.coords.push(c);
    }

    pub fn r_p(&self) -> u32 {
        self.r_p
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// All triples whose reduced sum is exactly `key`.
    #[inline]
    pub fn lookup(&self, key: Wide128) -> Chain<'_> {
        let mut slot = mix(key) as usize & self.mask;
        loop {
            let head = self.slots[slot];
            if head == EMPTY || self.keys[head as usize] == key {
                return Chain { table: self, cur: head };
            }
            slot = (slot + 1) & self.mask;
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = TripleEntry> + '_ {
        self.keys.iter().zip(&self.coords).map(|(&key, c)| TripleEntry {
            e: c[0],
            f: c[1],
            g: c[2],
            key,
        })
    }
}

pub struct Chain<'a> {
    table: &'a TripleTable,
    cur: u32,
}

impl Iterator for Chain<'_> {
    type Item = TripleEntry;

    fn next(&mut self) -> Option<TripleEntry> {
        if self.cur == EMPTY {
            return None;
        }
        let i = self.cur as usize;
        self.cur = self.table.next[i];
        let c = self.table.coords[i];
        Some(TripleEntry {
            e: c[0],
            f: c[1],
            g: c[2],
            key: self.table.keys[i],
        })
    }
}

/// Builds the table of reduced triples `e′ ≥ f′ ≥ g′`, `e′ ≤ bound/7`, with
/// `S′ ≡ r_p (mod p)` and the filters satisfied. `g′` comes from the sixth
/// roots of `r_p − e′⁶ − f′⁶` mod `p`, shifted by multiples of `p`.
pub fn build_triple_table(bound: u32, pm: &PrimeModulus, r_p: u32, filters: TripleFilters) -> TripleTable {
    let p = pm.p();
    assert!(r_p < p, "r_p {r_p} must be below p {p}");
    let top = bound / 7;
    assert!(top <= u32::from(u16::MAX), "reduced terms must fit in 16 bits");
    let mut entries = Vec::new();
    for e in 0..=top {
        let pe = pm.pow6(e);
        let se = sixth(e);
        for f in 0..=e {
            let want =
                ((u64::from(r_p) + 2 * u64::from(p) - u64::from(pe) - u64::from(pm.pow6(f))) % u64::from(p)) as u32;
            let sef = se + sixth(f);
            for &root in pm.roots(want) {
                let mut g = root;
                while g <= f {
                    if filters.accepts(e, f, g) {
                        entries.push((sef + sixth(g), [e as u16, f as u16, g as u16]));
                    }
                    g += p;
                }
            }
        }
    }
    TripleTable::from_entries(r_p, entries)
}
