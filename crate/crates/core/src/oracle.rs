//! Brute-force references for the sieve and its tables.
//!
//! None of these use the 7-divisibility structure or any other modular
//! shortcut of the engine, so a bug in the sieve cannot be mirrored here.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::catalog::Solution;
use crate::numthy::{pow6_mod, sixth, RootTable, Wide128, M6};
use crate::sievetab::TripleFilters;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_n_full: u32,
    pub max_n_component: u32,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_n_full: 400,
            max_n_component: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("bound {bound} is above the oracle limit {limit}")]
    TooLarge { bound: u32, limit: u32 },
}

/// Sorted table of all triple sums `e⁶+f⁶+g⁶`, `e ≥ f ≥ g`, with a directory
/// on the high bits of the sum to narrow each binary search.
struct TripleSums {
    // Sum in the high bits, (e, f, g) packed below it.
    packed: Vec<u128>,
    coord_bits: u32,
    dir_shift: u32,
    dir: Vec<u32>,
}

impl TripleSums {
    /// Triples drawn from `values`, which must be ascending.
    fn build_from(values: &[u32]) -> Self {
        let bound = values.last().copied().unwrap_or(0);
        let w = 32 - bound.leading_zeros().min(31);
        let coord_bits = 3 * w;
        let max_sum = 3 * sixth(bound);
        assert!(
            128 - max_sum.leading_zeros() + coord_bits <= 128,
            "bound too large to pack"
        );
        let n = values.len();
        let mut packed = Vec::with_capacity(n * (n + 1) * (n + 2) / 6);
        for (i, &e) in values.iter().enumerate() {
            for (j, &f) in values[..=i].iter().enumerate() {
                for &g in &values[..=j] {
                    let sum = sixth(e) + sixth(f) + sixth(g);
                    let c = (u128::from(e) << (2 * w)) | (u128::from(f) << w) | u128::from(g);
                    packed.push((sum << coord_bits) | c);
                }
            }
        }
        packed.sort_unstable();
        let sum_bits = 128 - max_sum.leading_zeros();
        let dir_bits = (packed.len().max(2).ilog2() + 1).min(sum_bits);
        let dir_shift = sum_bits - dir_bits;
        let mut dir = vec![0u32; (1usize << dir_bits) + 1];
        for (i, &k) in packed.iter().enumerate() {
            let bucket = ((k >> coord_bits) >> dir_shift) as usize;
            dir[bucket + 1] = i as u32 + 1;
        }
        for i in 1..dir.len() {
            dir[i] = dir[i].max(dir[i - 1]);
        }
        TripleSums {
            packed,
            coord_bits,
            dir_shift,
            dir,
        }
    }

    /// Every `(e, f, g)` with `e⁶+f⁶+g⁶ = sum`.
    fn find(&self, sum: Wide128, out: &mut Vec<[u32; 3]>) {
        let bucket = sum >> self.dir_shift;
        if bucket >= (self.dir.len() - 1) as u128 {
            return;
        }
        let bucket = bucket as usize;
        let lo = self.dir[bucket] as usize;
        let hi = self.dir[bucket + 1] as usize;
        let range = &self.packed[lo..hi];
        let start = range.partition_point(|&k| (k >> self.coord_bits) < sum);
        let w = self.coord_bits / 3;
        let mask = (1u128 << w) - 1;
        for &k in &range[start..] {
            if k >> self.coord_bits != sum {
                break;
            }
            out.push([
                ((k >> (2 * w)) & mask) as u32,
                ((k >> w) & mask) as u32,
                (k & mask) as u32,
            ]);
        }
    }
}

/// Every nontrivial solution with all terms `≤ bound`, by direct search:
/// a sorted table of triple sums probed for each difference
/// `(a⁶+b⁶) − (c⁶+d⁶) > 0`. Imprimitive solutions are kept.
///
/// Taking `c ≥ d` as the two largest right-hand terms bounds the triple sum
/// by `3d⁶`, so only left-hand pairs with sums in `(c⁶+d⁶, c⁶+d⁶+3d⁶]` are
/// tried.
pub fn oracle_search(bound: u32, limits: &OracleLimits) -> Result<Vec<Solution>, OracleError> {
    if bound > limits.max_n_full {
        return Err(OracleError::TooLarge {
            bound,
            limit: limits.max_n_full,
        });
    }
    Ok(search_among(&(0..=bound).collect::<Vec<_>>()))
}

/// [`oracle_search`] with every term drawn from `values`.
pub fn search_among(values: &[u32]) -> Vec<Solution> {
    let mut values = values.to_vec();
    values.sort_unstable();
    values.dedup();
    let triples = TripleSums::build_from(&values);
    let mut pairs: Vec<(Wide128, u32, u32)> = Vec::new();
    for (i, &a) in values.iter().enumerate() {
        for &b in &values[..=i] {
            pairs.push((sixth(a) + sixth(b), a, b));
        }
    }
    pairs.sort_unstable();
    let mut found = BTreeSet::new();
    let mut hits = Vec::new();
    for &(rhs, c, d) in &pairs {
        let lo = pairs.partition_point(|&(s, _, _)| s <= rhs);
        let hi = pairs.partition_point(|&(s, _, _)| s <= rhs + 3 * sixth(d));
        for &(lhs, a, b) in &pairs[lo..hi] {
            hits.clear();
            triples.find(lhs - rhs, &mut hits);
            for &[e, f, g] in &hits {
                let sol = Solution::canonicalize([a, b], [c, d, e, f, g]).expect("table sums are exact");
                if !sol.is_trivial() {
                    found.insert(sol);
                }
            }
        }
    }
    found.into_iter().collect()
}

/// All `(a, b)`, `b ≤ a ≤ bound`, with `(a⁶+b⁶) mod 7⁶ = v` and not both
/// divisible by 7, in `(a, b)` order.
pub fn oracle_pairs(bound: u32, v: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for a in 0..=bound {
        for b in 0..=a {
            if a % 7 == 0 && b % 7 == 0 {
                continue;
            }
            if (sixth(a) + sixth(b)) % Wide128::from(M6) == Wide128::from(v) {
                out.push((a, b));
            }
        }
    }
    out
}

/// All reduced triples `e′ ≥ f′ ≥ g′`, `e′ ≤ bound/7`, passing `filters`, with
/// `e′⁶+f′⁶+g′⁶ ≡ r_p (mod p)`, sorted.
pub fn oracle_triples(bound: u32, p: u32, r_p: u32, filters: TripleFilters) -> Vec<(u32, u32, u32)> {
    let top = bound / 7;
    let mut out = Vec::new();
    for e in 0..=top {
        for f in 0..=e {
            for g in 0..=f {
                if !filters.accepts(e, f, g) {
                    continue;
                }
                let s = sixth(e) + sixth(f) + sixth(g);
                if s % Wide128::from(p) == Wide128::from(r_p) {
                    out.push((e, f, g));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Root table by direct scan of `x ∈ [0, m)`.
pub fn oracle_roots(m: u32) -> RootTable {
    let mut by_residue: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for x in 0..m {
        let w = pow6_mod(u64::from(x), u64::from(m)).expect("m >= 2") as u32;
        by_residue.entry(w).or_default().push(x);
    }
    let lists = (0..m).map(|w| by_residue.remove(&w).unwrap_or_default()).collect();
    RootTable::from_lists(m, lists)
}
