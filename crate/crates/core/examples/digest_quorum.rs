//! Quorum validation without a network: the same workunit computed twice
//! gives the same digest, and a unit validates only once two workers agree.

use eulersieve::engine::digest::format_digest;
use eulersieve::engine::SearchFlags;
use eulersieve::worknet::worker::UnitRunner;
use eulersieve::worknet::{Coordinator, CoordinatorConfig, StatsMsg};

fn main() {
    let cfg = CoordinatorConfig {
        bound: 900,
        p: 701,
        chunk: 350,
        quorum: 2,
        flags: SearchFlags::default(),
    };
    let mut coord = Coordinator::in_memory(cfg).expect("config");
    let mut runner = UnitRunner::default();
    let mut now = 0;

    while !coord.is_complete() {
        for worker in ["ann", "bo", "cy"] {
            now += 1;
            let Some(unit) = coord.fetch(worker, now).expect("fetch") else {
                continue;
            };
            let report = runner.run(&unit, 1).expect("search");
            let digest = if worker == "cy" {
                report.digest ^ 1
            } else {
                report.digest
            };
            let status = coord
                .submit(
                    worker,
                    &unit.id,
                    &format_digest(digest),
                    &report.solutions,
                    StatsMsg::default(),
                    now,
                )
                .expect("submit");
            println!("{worker} {} {} -> {status:?}", unit.id, format_digest(digest));
        }
    }
    println!("{:?}", coord.status(now));
}
