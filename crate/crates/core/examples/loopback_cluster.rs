//! A coordinator and three workers on loopback, one of them reporting
//! corrupted digests.
//!
//! ```text
//! cargo run --release --example loopback_cluster -- 1200 200
//! ```

use std::time::Duration;

use eulersieve::engine::auto_prime;
use eulersieve::engine::digest::format_digest;
use eulersieve::engine::SearchFlags;
use eulersieve::worknet::{worker_loop, Coordinator, CoordinatorConfig, Server, WorkerOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let bound: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1200);
    let chunk: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);

    let cfg = CoordinatorConfig {
        bound,
        p: auto_prime(bound),
        chunk,
        quorum: 2,
        flags: SearchFlags::default(),
    };
    let server = Server::start("127.0.0.1:0", Coordinator::in_memory(cfg).expect("config")).expect("bind");
    println!("serving on {}", server.url());

    let workers: Vec<_> = [("left", false), ("right", false), ("noisy", true)]
        .into_iter()
        .map(|(id, corrupt)| {
            let mut opts = WorkerOptions::new(server.url(), id);
            opts.corrupt_digest = corrupt;
            opts.idle_poll = Duration::from_millis(100);
            std::thread::spawn(move || (id, worker_loop(&opts)))
        })
        .collect();
    for w in workers {
        let (id, summary) = w.join().expect("worker thread");
        let s = summary.expect("worker");
        println!(
            "{id}: {} units, {} accepted, {} validated",
            s.units, s.accepted, s.validated
        );
    }

    let coord = server.shutdown();
    for u in &coord.state().units {
        let agreed = u.validated.map(format_digest).unwrap_or_else(|| "-".into());
        let who: Vec<&str> = u.reports.iter().map(|r| r.worker.as_str()).collect();
        println!("{:<22} {agreed} reports from {who:?}", u.unit.id);
    }
    for s in coord.solutions() {
        println!("{s}");
    }
}
