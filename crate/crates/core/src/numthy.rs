//! Exact sixth powers and the modular tables the sieve is built on.
//!
//! Everything here is immutable once constructed. A [`PrimeModulus`] carries
//! the sieve prime together with its sixth-power residues and sixth-root
//! lookup; [`Mod7Tables`] carries the fixed tables for the moduli 7⁶ and 7⁷.
//!
//! For a prime `p ≡ 2 (mod 3)` cubing is a bijection on the units mod `p`,
//! so `x⁶ ≡ w` reduces to a square root and has at most two solutions,
//! `x` and `p − x`. Lookups are therefore O(1) with at most two values.

use std::sync::OnceLock;

use thiserror::Error;

/// Largest term supported by the exact arithmetic (2·250000⁶ < 2¹⁰⁹).
pub const MAX_TERM: u32 = 250_000;

/// 7⁶: every admissible difference `(a⁶+b⁶) − (c⁶+d⁶)` is a multiple of this.
pub const M6: u32 = 117_649;

/// 7⁷, the modulus of the t-digit filter.
pub const M7: u32 = 823_543;

/// Exclusive upper bound on the sieve prime.
pub const MAX_PRIME: u32 = 1 << 31;

/// Exact value of a sum of sixth powers. Sums of up to seven terms bounded by
/// [`MAX_TERM`] stay below 2¹¹².
pub type Wide128 = u128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumthyError {
    #[error("term {0} exceeds the supported maximum {MAX_TERM}")]
    TermOutOfRange(u64),
    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(u64),
    #[error("prime target {0} is above 2^31")]
    TargetTooLarge(u64),
    #[error("{0} is not a usable sieve prime (need a prime 7 < p < 2^31 with p = 2 mod 3)")]
    BadPrime(u64),
    #[error("gcd of an empty list is undefined")]
    EmptyList,
}

/// `x⁶` for `x ≤ MAX_TERM`, without range checking beyond a debug assertion.
#[inline(always)]
pub fn sixth(x: u32) -> Wide128 {
    debug_assert!(x <= MAX_TERM);
    let sq = u64::from(x) * u64::from(x);
    let cube = sq * u64::from(x);
    u128::from(cube) * u128::from(cube)
}

/// Exact `x⁶`.
pub fn pow6_exact(x: u64) -> Result<Wide128, NumthyError> {
    if x > u64::from(MAX_TERM) {
        return Err(NumthyError::TermOutOfRange(x));
    }
    Ok(sixth(x as u32))
}

/// `x⁶ mod m` by modular squaring.
pub fn pow6_mod(x: u64, m: u64) -> Result<u64, NumthyError> {
    if m < 2 {
        return Err(NumthyError::ModulusTooSmall(m));
    }
    Ok(pow6_mod_unchecked(x, m))
}

#[inline]
fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((u128::from(a) * u128::from(b)) % u128::from(m)) as u64
}

#[inline]
pub(crate) fn pow6_mod_unchecked(x: u64, m: u64) -> u64 {
    let x = x % m;
    let cube = mulmod(mulmod(x, x, m), x, m);
    mulmod(cube, cube, m)
}

/// Deterministic Miller–Rabin for 32-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for small in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(small) {
            return n == small;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    // Bases 2, 3, 5, 7, 11, 13, 17 are deterministic below 3.4e14.
    'witness: for base in [2u64, 3, 5, 7, 11, 13, 17] {
        let mut x = powmod(base, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub(crate) fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Smallest prime `p ≥ max(target, 11)` with `p ≡ 2 (mod 3)`.
pub fn select_prime(target: u64) -> Result<u32, NumthyError> {
    if target > u64::from(MAX_PRIME) {
        return Err(NumthyError::TargetTooLarge(target));
    }
    let mut p = target.max(11);
    // Step to the next candidate congruent to 5 mod 6 (odd and 2 mod 3).
    while p % 6 != 5 {
        p += 1;
    }
    while !is_prime(p) {
        p += 6;
    }
    if p >= u64::from(MAX_PRIME) {
        return Err(NumthyError::TargetTooLarge(target));
    }
    Ok(p as u32)
}

/// gcd of all terms; zeros are ignored and an all-zero list gives 0.
pub fn gcd_all(terms: &[u32]) -> Result<u32, NumthyError> {
    if terms.is_empty() {
        return Err(NumthyError::EmptyList);
    }
    Ok(terms.iter().fold(0, |acc, &t| gcd(acc, t)))
}

pub fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Number of terms not divisible by 7.
pub fn u7(terms: &[u32]) -> usize {
    terms.iter().filter(|&&t| t % 7 != 0).count()
}

/// Sixth roots modulo a fixed modulus, stored as a packed value array indexed
/// by per-residue offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootTable {
    modulus: u32,
    // offsets[w]..offsets[w + 1] indexes `values` for residue w.
    offsets: Vec<u32>,
    values: Vec<u32>,
}

impl RootTable {
    /// Scans `x ∈ [0, m)` once and buckets every `x` under `x⁶ mod m`.
    pub fn build(m: u32) -> Result<Self, NumthyError> {
        if m < 2 {
            return Err(NumthyError::ModulusTooSmall(u64::from(m)));
        }
        let modulus = u64::from(m);
        let residues: Vec<u32> = (0..modulus).map(|x| pow6_mod_unchecked(x, modulus) as u32).collect();
        let mut offsets = vec![0u32; m as usize + 1];
        for &w in &residues {
            offsets[w as usize + 1] += 1;
        }
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }
        let mut cursor = offsets.clone();
        let mut values = vec![0u32; m as usize];
        for (x, &w) in residues.iter().enumerate() {
            let slot = &mut cursor[w as usize];
            values[*slot as usize] = x as u32;
            *slot += 1;
        }
        Ok(RootTable {
            modulus: m,
            offsets,
            values,
        })
    }

    /// Assembles a table from explicit per-residue lists. Lists are sorted;
    /// the caller is responsible for their correctness.
    pub fn from_lists(m: u32, lists: Vec<Vec<u32>>) -> Self {
        assert_eq!(lists.len(), m as usize, "one list per residue");
        let mut offsets = Vec::with_capacity(m as usize + 1);
        let mut values = Vec::new();
        offsets.push(0);
        for mut list in lists {
            list.sort_unstable();
            values.extend(list);
            offsets.push(values.len() as u32);
        }
        RootTable {
            modulus: m,
            offsets,
            values,
        }
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    /// Ascending roots of `x⁶ ≡ w`. Residues outside `[0, modulus)` have none.
    #[inline(always)]
    pub fn roots(&self, w: u32) -> &[u32] {
        let w = w as usize;
        if w + 1 >= self.offsets.len() {
            return &[];
        }
        &self.values[self.offsets[w] as usize..self.offsets[w + 1] as usize]
    }

    /// Number of stored roots across all residues; equals the modulus.
    pub fn total(&self) -> usize {
        self.values.len()
    }

    /// Residues with at least one root, ascending.
    pub fn residues(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.modulus).filter(move |&w| !self.roots(w).is_empty())
    }
}

/// The sieve prime with its precomputed residue and root tables.
#[derive(Debug, Clone)]
pub struct PrimeModulus {
    p: u32,
    pow6: Vec<u32>,
    roots: RootTable,
}

impl PrimeModulus {
    /// Builds tables for prime `p`, sized for terms up to `bound`.
    pub fn new(p: u32, bound: u32) -> Result<Self, NumthyError> {
        if p <= 7 || u64::from(p) >= u64::from(MAX_PRIME) || p % 3 != 2 || !is_prime(u64::from(p)) {
            return Err(NumthyError::BadPrime(u64::from(p)));
        }
        let len = bound.min(p - 1) as u64 + 1;
        let pow6 = (0..len).map(|x| pow6_mod_unchecked(x, u64::from(p)) as u32).collect();
        Ok(PrimeModulus {
            p,
            pow6,
            roots: RootTable::build(p)?,
        })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// `x⁶ mod p` for any `x` whose residue mod `p` lies inside the table.
    #[inline(always)]
    pub fn pow6(&self, x: u32) -> u32 {
        self.pow6[(x % self.p) as usize]
    }

    #[inline(always)]
    pub fn roots(&self, w: u32) -> &[u32] {
        self.roots.roots(w)
    }

    pub fn root_table(&self) -> &RootTable {
        &self.roots
    }

    /// Number of table entries held, for memory accounting.
    pub fn table_entries(&self) -> usize {
        self.pow6.len() + self.roots.total()
    }
}

/// Fixed tables for the moduli 7⁶ and 7⁷.
#[derive(Debug)]
pub struct Mod7Tables {
    roots6: RootTable,
    pow7: Vec<u32>,
}

impl Mod7Tables {
    pub fn new() -> Self {
        let pow7 = (0..u64::from(M7))
            .map(|x| pow6_mod_unchecked(x, u64::from(M7)) as u32)
            .collect();
        Mod7Tables {
            roots6: RootTable::build(M6).expect("7^6 is a valid modulus"),
            pow7,
        }
    }

    /// Process-wide shared instance.
    pub fn global() -> &'static Mod7Tables {
        static TABLES: OnceLock<Mod7Tables> = OnceLock::new();
        TABLES.get_or_init(Mod7Tables::new)
    }

    pub fn m6(&self) -> u32 {
        M6
    }

    pub fn m7(&self) -> u32 {
        M7
    }

    pub fn roots6(&self) -> &RootTable {
        &self.roots6
    }

    /// `x⁶ mod 7⁷`.
    #[inline(always)]
    pub fn pow7(&self, x: u32) -> u32 {
        self.pow7[(x % M7) as usize]
    }
}

impl Default for Mod7Tables {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_prime(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn pow6_exact_examples() {
        assert_eq!(pow6_exact(0).unwrap(), 0);
        assert_eq!(pow6_exact(2).unwrap(), 64);
        // Repeated squaring on exact integers: 156² = 24336, 24336³.
        let sq: u128 = 156 * 156;
        assert_eq!(sq * sq * sq, 14_412_774_445_056);
        assert_eq!(pow6_exact(156).unwrap(), 14_412_774_445_056);
        assert_eq!(pow6_exact(250_001), Err(NumthyError::TermOutOfRange(250_001)));
        assert!(pow6_exact(250_000).is_ok());
    }

    #[test]
    fn pow6_mod_examples() {
        assert_eq!(pow6_mod(3, 7).unwrap(), 1);
        assert_eq!(pow6_mod(14, 8).unwrap(), 0);
        assert_eq!(pow6_mod(2, 11).unwrap(), 9);
        assert_eq!(pow6_mod(5, 1), Err(NumthyError::ModulusTooSmall(1)));
    }

    #[test]
    fn pow6_mod_small_moduli_facts() {
        for x in 0..5000u64 {
            let m9 = pow6_mod(x, 9).unwrap();
            assert_eq!(m9, u64::from(x % 3 != 0), "x={x}");
            let m8 = pow6_mod(x, 8).unwrap();
            assert_eq!(m8, x % 2, "x={x}");
            let m7 = pow6_mod(x, 7).unwrap();
            assert_eq!(m7, u64::from(x % 7 != 0), "x={x}");
        }
    }

    #[test]
    fn select_prime_examples() {
        assert_eq!(select_prime(11).unwrap(), 11);
        assert_eq!(select_prime(13).unwrap(), 17);
        assert_eq!(select_prime(8860).unwrap(), 8861);
        assert_eq!(select_prime(2).unwrap(), 11);
        assert!(matches!(
            select_prime(u64::from(MAX_PRIME) + 1),
            Err(NumthyError::TargetTooLarge(_))
        ));
    }

    #[test]
    fn select_prime_matches_trial_division() {
        for target in 2..3000u64 {
            let p = u64::from(select_prime(target).unwrap());
            let expected = (target.max(11)..)
                .find(|&q| q % 3 == 2 && trial_division_prime(q))
                .unwrap();
            assert_eq!(p, expected, "target={target}");
        }
    }

    #[test]
    fn miller_rabin_agrees_with_trial_division() {
        for n in 0..20_000u64 {
            assert_eq!(is_prime(n), trial_division_prime(n), "n={n}");
        }
        assert!(is_prime(2_147_483_647));
        assert!(!is_prime(2_147_483_649));
    }

    #[test]
    fn root_table_mod_11() {
        let t = RootTable::build(11).unwrap();
        assert_eq!(t.roots(3), &[3, 8]);
        assert_eq!(t.roots(2), &[] as &[u32]);
        assert_eq!(t.roots(0), &[0]);
        let residues: Vec<u32> = t.residues().collect();
        assert_eq!(residues, vec![0, 1, 3, 4, 5, 9]);
        assert_eq!(t.total(), 11);
        assert_eq!(t.roots(11), &[] as &[u32]);
    }

    #[test]
    fn root_table_for_seven() {
        let t = RootTable::build(7).unwrap();
        assert_eq!(t.roots(1), &[1, 2, 3, 4, 5, 6]);
        assert_eq!(t.roots(0), &[0]);
    }

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd_all(&[1117, 770, 1092, 861, 602, 212, 84]).unwrap(), 1);
        assert_eq!(gcd_all(&[2, 4, 6]).unwrap(), 2);
        assert_eq!(gcd_all(&[0, 0]).unwrap(), 0);
        assert_eq!(gcd_all(&[0, 9, 6]).unwrap(), 3);
        assert_eq!(gcd_all(&[]), Err(NumthyError::EmptyList));
    }

    #[test]
    fn u7_examples() {
        assert_eq!(u7(&[1117, 770]), 1);
        assert_eq!(u7(&[7, 14]), 0);
        assert_eq!(u7(&[1, 2]), 2);
    }

    #[test]
    fn prime_modulus_rejects_bad_primes() {
        for bad in [2, 5, 7, 13, 15, 21] {
            assert!(PrimeModulus::new(bad, 100).is_err(), "p={bad}");
        }
        let pm = PrimeModulus::new(11, 100).unwrap();
        assert_eq!(pm.pow6(2), 9);
        assert_eq!(pm.pow6(13), 9);
        assert_eq!(pm.roots(0), &[0]);
    }

    #[test]
    fn mod7_constants() {
        let m = Mod7Tables::global();
        assert_eq!(m.m6(), 117_649);
        assert_eq!(m.m7(), 823_543);
        assert_eq!(7u32.pow(6), M6);
        for x in [1u32, 2, 3, 100, 1117, 250_000] {
            let r = m.pow7(x);
            assert_eq!(u64::from(r), pow6_mod(u64::from(x), u64::from(M7)).unwrap());
            if x % 7 != 0 {
                assert_eq!(r % 7, 1);
            }
        }
        for x in [0u32, 7, 14, 770, 249_998] {
            assert_eq!(m.pow7(x) % M6, 0, "x={x}");
        }
        assert_eq!(m.roots6().total(), M6 as usize);
    }
}
