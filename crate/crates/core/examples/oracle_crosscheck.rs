//! Compares the sieve with brute force at a small bound, then shows that the
//! brute-force routine recovers a known solution from its own terms.
//!
//! ```text
//! cargo run --release --example oracle_crosscheck -- 300
//! ```

use std::time::Instant;

use eulersieve::catalog;
use eulersieve::engine::{search, SearchConfig};
use eulersieve::oracle::{oracle_search, search_among, OracleLimits};

fn main() {
    let bound: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(300);

    let t = Instant::now();
    let slow = oracle_search(bound, &OracleLimits::default()).expect("oracle");
    let slow_secs = t.elapsed().as_secs_f64();
    let mut cfg = SearchConfig::new(bound);
    cfg.flags.include_imprimitive = true;
    let fast = search(&cfg).expect("search");
    println!(
        "N={bound}: oracle {} solutions in {slow_secs:.2}s, sieve {} in {:.2}s, agree={}",
        slow.len(),
        fast.solutions.len(),
        fast.elapsed_secs,
        slow == fast.solutions
    );

    let first = catalog::bundled()[0].solution;
    let mut values = first.terms().to_vec();
    values.extend([5, 11, 400]);
    for s in search_among(&values) {
        println!("among {values:?}: {s}");
    }
}
