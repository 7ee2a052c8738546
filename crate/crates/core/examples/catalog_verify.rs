//! Verifies the bundled list of known solutions and prints a few of them.

use eulersieve::catalog;

fn main() {
    let entries = catalog::bundled();
    let bad: Vec<_> = entries
        .iter()
        .filter(|e| !catalog::verify(&e.solution, 250_000).passed())
        .collect();
    let sols: Vec<_> = entries.iter().map(|e| e.solution).collect();
    println!(
        "{} entries, {} failing, sorted={}",
        entries.len(),
        bad.len(),
        catalog::is_lex_sorted(&sols)
    );
    for e in entries.iter().take(5) {
        println!("#{:<3} {}  ({})", e.index, e.solution, e.discoverer);
    }
    let largest = entries.iter().map(|e| e.solution.max_term()).max().unwrap_or(0);
    println!("largest term {largest}");
}
