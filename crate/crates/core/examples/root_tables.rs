//! Sixth-root tables modulo a prime p ≡ 2 (mod 3) and modulo 7⁶.

use eulersieve::numthy::{select_prime, Mod7Tables, RootTable};

fn main() {
    let target: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let p = select_prime(target).expect("prime");
    let t = RootTable::build(p).expect("table");
    let residues: Vec<u32> = t.residues().collect();
    println!("p={p}: {} sixth-power residues", residues.len());
    for &w in residues.iter().take(8) {
        println!("  x^6 = {w:>4} (mod {p}): x in {:?}", t.roots(w));
    }

    let m7 = Mod7Tables::global();
    let six = m7.roots6();
    let mut by_count = std::collections::BTreeMap::new();
    for w in six.residues() {
        *by_count.entry(six.roots(w).len()).or_insert(0) += 1;
    }
    println!("mod {}: residues by number of roots {by_count:?}", six.modulus());
}
