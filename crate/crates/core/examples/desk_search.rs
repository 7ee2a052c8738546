//! Full search up to a small bound.
//!
//! ```text
//! cargo run --release --example desk_search -- 1200 [threads] [batch_entries]
//! ```

use eulersieve::engine::{search, SearchConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let bound: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1200);
    let threads: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let batch: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let mut cfg = SearchConfig::new(bound);
    cfg.threads = threads;
    cfg.batch_entries = batch;
    let out = search(&cfg).expect("search failed");

    println!(
        "N={} p={} residues={} time={:.1}s",
        out.bound,
        out.p,
        out.units.len(),
        out.elapsed_secs
    );
    println!(
        "pairs={} probes={} hits={} confirmed={}",
        out.stats.pairs, out.stats.probes, out.stats.hits, out.stats.confirmed
    );
    for s in &out.solutions {
        println!("{s}");
    }
}
