//! Interrupted search: run part of the residue range into a checkpoint, then
//! resume the whole range from it.

use eulersieve::engine::digest::format_digest;
use eulersieve::engine::{search, SearchConfig};

fn main() {
    let dir = std::env::temp_dir().join(format!("eulersieve-ckpt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("n1200.ckpt");

    let mut part = SearchConfig::new(1200);
    part.rp_end = Some(300);
    part.checkpoint = Some(path.clone());
    let first = search(&part).expect("partial run");
    println!("first run: {} residues, {:.2}s", first.units.len(), first.elapsed_secs);

    let mut full = SearchConfig::new(1200);
    full.checkpoint = Some(path.clone());
    let resumed = search(&full).expect("resumed run");
    println!(
        "resumed run: {} of {} residues from checkpoint, {:.2}s, digest {}",
        resumed.resumed_units(),
        resumed.units.len(),
        resumed.elapsed_secs,
        format_digest(resumed.range_digest())
    );
    for s in &resumed.solutions {
        println!("{s}");
    }
    let _ = std::fs::remove_dir_all(dir);
}
