//! Property checks runnable from the installed binary (`eulersieve selftest`).

use std::fmt;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::catalog::{self, Solution};
use crate::engine::{self, auto_prime, SearchConfig, SearchFlags};
use crate::numthy::{is_prime, pow6_mod, sixth, Mod7Tables, PrimeModulus, RootTable, Wide128, MAX_TERM};
use crate::oracle::{oracle_pairs, oracle_roots, oracle_search, oracle_triples, OracleLimits};
use crate::sievetab::{admissible_classes, build_triple_table, pairs_for_class, TripleFilters};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub checks: u64,
    pub failures: Vec<String>,
    pub secs: f64,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for SuiteOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} ({} checks, {:.2}s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checks,
            self.secs
        )?;
        for msg in self.failures.iter().take(5) {
            write!(f, "\n    {msg}")?;
        }
        if self.failures.len() > 5 {
            write!(f, "\n    ... {} more", self.failures.len() - 5)?;
        }
        Ok(())
    }
}

struct Suite {
    checks: u64,
    failures: Vec<String>,
}

impl Suite {
    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(msg());
        }
    }
}

fn run_suite(name: &'static str, body: impl FnOnce(&mut Suite)) -> SuiteOutcome {
    let started = Instant::now();
    let mut s = Suite {
        checks: 0,
        failures: Vec::new(),
    };
    body(&mut s);
    SuiteOutcome {
        name,
        checks: s.checks,
        failures: s.failures,
        secs: started.elapsed().as_secs_f64(),
    }
}

const SEED: u64 = 0x5eed_0625;

pub fn run_all(level: Level) -> Vec<SuiteOutcome> {
    vec![
        run_suite("numthy.roots", |s| roots(s, level)),
        run_suite("numthy.arith", |s| arith(s, level)),
        run_suite("sievetab.pairs", |s| pairs(s, level)),
        run_suite("sievetab.triples", |s| triples(s, level)),
        run_suite("oracle.search", |s| search_vs_oracle(s, level)),
        run_suite("catalog.bundled", bundled_catalog),
    ]
}

/// Every nonzero sixth residue of a prime `p ≡ 2 (mod 3)` has exactly the
/// roots `x` and `p − x`.
fn roots(s: &mut Suite, level: Level) {
    let limit = match level {
        Level::Quick => 2000,
        Level::Full => 10007,
    };
    for p in (11..=limit).filter(|&p| p % 3 == 2 && is_prime(u64::from(p))) {
        let t = match RootTable::build(p) {
            Ok(t) => t,
            Err(e) => {
                s.check(false, || format!("p={p}: {e}"));
                continue;
            }
        };
        s.check(t.roots(0) == [0], || format!("p={p}: roots of 0 are {:?}", t.roots(0)));
        let mut residues = 0;
        for w in 1..p {
            let r = t.roots(w);
            if r.is_empty() {
                continue;
            }
            residues += 1;
            s.check(r.len() == 2 && r[0] + r[1] == p, || format!("p={p} w={w}: roots {r:?}"));
        }
        s.check(residues == (p - 1) / 2, || {
            format!("p={p}: {residues} nonzero residues")
        });
        if p < 300 {
            s.check(t == oracle_roots(p), || format!("p={p}: differs from direct scan"));
        }
    }
}

fn arith(s: &mut Suite, level: Level) {
    let mut rng = StdRng::seed_from_u64(SEED);
    let n = match level {
        Level::Quick => 10_000,
        Level::Full => 200_000,
    };
    for _ in 0..n {
        let x = rng.gen_range(0..=MAX_TERM);
        let m = rng.gen_range(2..=u32::MAX);
        let direct = sixth(x) % Wide128::from(m);
        let modular = pow6_mod(u64::from(x), u64::from(m)).map(Wide128::from);
        s.check(modular == Ok(direct), || {
            format!("{x}^6 mod {m}: {modular:?} vs {direct}")
        });
    }
    for k in 0..20_000u64 {
        let trial = k >= 2 && (2..).take_while(|d| d * d <= k).all(|d| k % d != 0);
        s.check(is_prime(k) == trial, || format!("is_prime({k})"));
    }
    let m7 = Mod7Tables::global();
    s.check(m7.roots6().roots(1).len() == 6, || {
        "six roots of 1 mod 7^6 expected".into()
    });
}

fn component_bound(level: Level) -> (u32, usize) {
    match level {
        Level::Quick => (400, 10),
        Level::Full => (2000, 50),
    }
}

fn pairs(s: &mut Suite, level: Level) {
    let (bound, samples) = component_bound(level);
    let mut rng = StdRng::seed_from_u64(SEED ^ 1);
    let p = auto_prime(bound);
    let pm = PrimeModulus::new(p, bound).expect("auto prime is valid");
    let m7 = Mod7Tables::global();
    let classes: Vec<u32> = admissible_classes().collect();
    for _ in 0..samples {
        let v = classes[rng.gen_range(0..classes.len())];
        let buckets = pairs_for_class(bound, &pm, m7, v);
        let mut got: Vec<(u32, u32)> = buckets.records().iter().map(|r| (r.a, r.b)).collect();
        got.sort_unstable();
        let want = oracle_pairs(bound, v);
        s.check(got == want, || {
            format!("N={bound} v={v}: {} pairs vs {} expected", got.len(), want.len())
        });
        for r in buckets.records() {
            let sum = sixth(r.a) + sixth(r.b);
            s.check(r.sum == sum && Wide128::from(r.s) == sum % Wide128::from(p), || {
                format!("record {r:?} has wrong sums")
            });
        }
    }
}

fn triples(s: &mut Suite, level: Level) {
    let (bound, samples) = component_bound(level);
    let mut rng = StdRng::seed_from_u64(SEED ^ 2);
    let p = auto_prime(bound);
    let pm = PrimeModulus::new(p, bound).expect("auto prime is valid");
    for _ in 0..samples {
        let r_p = rng.gen_range(0..p);
        for filters in [TripleFilters::default(), TripleFilters::NONE] {
            let table = build_triple_table(bound, &pm, r_p, filters);
            let mut got: Vec<(u32, u32, u32)> = table
                .entries()
                .map(|e| {
                    let [a, b, c] = e.coords();
                    (a, b, c)
                })
                .collect();
            got.sort_unstable();
            let want = oracle_triples(bound, p, r_p, filters);
            s.check(got == want, || {
                format!(
                    "N={bound} p={p} r_p={r_p} {filters:?}: {} triples vs {}",
                    got.len(),
                    want.len()
                )
            });
        }
    }
}

fn search_vs_oracle(s: &mut Suite, level: Level) {
    let bounds: &[u32] = match level {
        Level::Quick => &[120, 200],
        Level::Full => &[200, 300, 400],
    };
    for &bound in bounds {
        let expected = match oracle_search(bound, &OracleLimits::default()) {
            Ok(v) => v,
            Err(e) => {
                s.check(false, || e.to_string());
                continue;
            }
        };
        let mut cfg = SearchConfig::new(bound);
        cfg.flags = SearchFlags {
            t_filter: true,
            include_imprimitive: true,
        };
        match engine::search(&cfg) {
            Ok(out) => s.check(out.solutions == expected, || {
                format!("N={bound}: engine {:?} vs oracle {:?}", out.solutions, expected)
            }),
            Err(e) => s.check(false, || format!("N={bound}: {e}")),
        }
    }
}

fn bundled_catalog(s: &mut Suite) {
    let entries = catalog::bundled();
    s.check(entries.len() == 377, || format!("{} entries", entries.len()));
    let sols: Vec<Solution> = entries.iter().map(|e| e.solution).collect();
    for e in &entries {
        let sol = &e.solution;
        let report = catalog::verify(sol, MAX_TERM);
        s.check(report.passed(), || format!("#{}: {report:?}", e.index));
        s.check(sol.is_primitive() && !sol.is_trivial(), || {
            format!("#{} is imprimitive or trivial", e.index)
        });
    }
    s.check(catalog::is_lex_sorted(&sols), || "catalog is not sorted".into());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suites_pass() {
        for outcome in run_all(Level::Quick) {
            assert!(outcome.passed(), "{outcome}");
            assert!(outcome.checks > 0, "{outcome}");
        }
    }
}
