//! Builds the pair buckets for one class and the triple table for one
//! residue, and prints their sizes.

use eulersieve::engine::auto_prime;
use eulersieve::numthy::{Mod7Tables, PrimeModulus};
use eulersieve::sievetab::{admissible_classes, build_triple_table, pairs_for_class, TripleFilters};

fn main() {
    let bound: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let p = auto_prime(bound);
    let pm = PrimeModulus::new(p, bound).expect("prime");
    let m7 = Mod7Tables::global();

    let classes: Vec<u32> = admissible_classes().collect();
    println!("N={bound} p={p}, {} admissible classes", classes.len());
    for &v in classes.iter().step_by(classes.len() / 4) {
        let b = pairs_for_class(bound, &pm, m7, v);
        println!("  class {v:>6}: {} pairs in {} buckets", b.len(), b.buckets().count());
    }

    for r in [0, p / 3, p - 1] {
        let filtered = build_triple_table(bound, &pm, r, TripleFilters::default()).len();
        let all = build_triple_table(bound, &pm, r, TripleFilters::NONE).len();
        println!("  residue {r:>5}: {filtered} triples after filters, {all} before");
    }
}
