use std::collections::BTreeMap;
use std::time::Duration;

use eulersieve::catalog::{Solution, SolutionJson};
use eulersieve::engine::digest::format_digest;
use eulersieve::engine::{auto_prime, search, SearchConfig, SearchFlags};
use eulersieve::worknet::journal::parse_events;
use eulersieve::worknet::{
    worker_loop, Coordinator, CoordinatorConfig, CoordinatorState, Server, StatsMsg, SubmitStatus, WorkerOptions,
    WorknetError,
};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn config(chunk: u32) -> CoordinatorConfig {
    CoordinatorConfig {
        bound: 1200,
        p: 929,
        chunk,
        quorum: 2,
        flags: SearchFlags::default(),
    }
}

fn honest_digest(unit: &str) -> String {
    format_digest(eulersieve::engine::digest::fnv1a64(unit.as_bytes()))
}

fn first_json() -> SolutionJson {
    SolutionJson::bare(&Solution::from_terms([1117, 770, 1092, 861, 602, 212, 84]).unwrap())
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Honest,
    /// Reports a digest no one else produces.
    Corrupt,
    /// Reports a "solution" that does not verify.
    Forger,
}

struct SimWorker {
    id: String,
    kind: Kind,
    holding: Option<String>,
    rejected: bool,
}

/// Runs randomized fetch/submit rounds until every unit validates. Calls
/// `observe` after each coordinator call.
fn simulate(
    coord: &mut Coordinator,
    workers: &mut [SimWorker],
    seed: u64,
    mut observe: impl FnMut(&Coordinator),
) -> usize {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut now = 1000;
    let mut rounds = 0;
    while !coord.is_complete() {
        rounds += 1;
        assert!(rounds < 10_000, "no progress");
        now += rng.gen_range(0..3);
        let w = workers.choose_mut(&mut rng).unwrap();
        match w.holding.take() {
            None => match coord.fetch(&w.id, now) {
                Ok(Some(u)) => w.holding = Some(u.id),
                Ok(None) => {}
                Err(WorknetError::Banned(_)) => {}
                Err(e) => panic!("fetch: {e}"),
            },
            Some(unit) => {
                let digest = match w.kind {
                    Kind::Honest | Kind::Forger => honest_digest(&unit),
                    Kind::Corrupt => format_digest(rng.gen()),
                };
                let sols = if unit.contains("-0-") {
                    vec![first_json()]
                } else {
                    vec![]
                };
                let sols = if w.kind == Kind::Forger {
                    let mut bad = first_json();
                    bad.g += 1;
                    vec![bad]
                } else {
                    sols
                };
                match coord.submit(&w.id, &unit, &digest, &sols, StatsMsg::default(), now) {
                    Ok(st) => {
                        assert_eq!(st == SubmitStatus::Rejected, w.kind == Kind::Forger);
                        w.rejected |= st == SubmitStatus::Rejected;
                    }
                    // The unit validated while this worker held it.
                    Err(WorknetError::NotAssigned { .. }) => {}
                    Err(e) => panic!("submit: {e}"),
                }
            }
        }
        observe(coord);
    }
    rounds
}

fn workers(kinds: &[Kind]) -> Vec<SimWorker> {
    kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| SimWorker {
            id: format!("w{i}"),
            kind,
            holding: None,
            rejected: false,
        })
        .collect()
}

#[test]
fn every_unit_validates_on_the_honest_digest() {
    use Kind::*;
    let crews: [&[Kind]; 4] = [
        &[Honest, Honest],
        &[Honest, Honest, Corrupt],
        &[Honest, Corrupt, Honest, Forger, Corrupt],
        &[Corrupt, Honest, Honest, Honest, Forger],
    ];
    for (i, crew) in crews.iter().enumerate() {
        for seed in 0..5 {
            let mut coord = Coordinator::in_memory(config(100)).unwrap();
            let mut ws = workers(crew);
            simulate(&mut coord, &mut ws, seed * 31 + i as u64, |_| {});
            for u in &coord.state().units {
                let agreed = u.validated.unwrap();
                assert_eq!(format_digest(agreed), honest_digest(&u.unit.id));
                let agreeing: std::collections::BTreeSet<&str> = u
                    .reports
                    .iter()
                    .filter(|r| r.digest == agreed)
                    .map(|r| r.worker.as_str())
                    .collect();
                assert!(agreeing.len() >= 2);
            }
            assert_eq!(coord.solutions().len(), 1);
            for w in &ws {
                assert_eq!(coord.state().banned.contains(&w.id), w.rejected);
            }
        }
    }
}

#[test]
fn journal_replay_matches_live_state_at_every_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal");
    let mut coord = Coordinator::open(config(240), &path, 1000).unwrap();
    let mut ws = workers(&[Kind::Honest, Kind::Corrupt, Kind::Honest, Kind::Forger]);
    // Live state after each coordinator call, keyed by journal length.
    let mut snapshots: BTreeMap<usize, CoordinatorState> = BTreeMap::new();
    let count = |p: &std::path::Path| std::fs::read_to_string(p).unwrap().lines().count();
    snapshots.insert(count(&path), coord.state().clone());
    simulate(&mut coord, &mut ws, 7, |c| {
        snapshots.insert(count(&path), c.state().clone());
    });
    drop(coord);

    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let (events, _) = parse_events(&text).unwrap();
    assert_eq!(events.len(), lines.len());
    let prefix_path = dir.path().join("prefix");
    for k in 1..=lines.len() {
        let prefix: String = lines[..k].concat();
        // Kill after k complete records, with and without a torn next record.
        for torn in [None, lines.get(k).map(|l| &l[..l.len() / 2])] {
            let mut body = prefix.clone();
            if let Some(t) = torn {
                body.push_str(t);
            }
            std::fs::write(&prefix_path, &body).unwrap();
            let recovered = Coordinator::recover(&prefix_path, 5000).unwrap();
            // A crash between a quorum report and its validate record is
            // completed on recovery, landing on the next snapshot.
            let expected = snapshots
                .range(k..)
                .next()
                .map(|(_, s)| s)
                .expect("snapshot at or after every prefix");
            assert_eq!(recovered.state(), expected, "prefix of {k} records");
            assert_eq!(recovered.state().outstanding(), expected.outstanding());
            assert_eq!(recovered.state().validated_units(), expected.validated_units());
        }
    }
}

#[test]
fn loopback_cluster_matches_single_process_search() {
    let bound = 700;
    let p = auto_prime(bound);
    let cfg = CoordinatorConfig {
        bound,
        p,
        chunk: 100,
        quorum: 2,
        flags: SearchFlags::default(),
    };
    let dir = tempfile::tempdir().unwrap();
    let coord = Coordinator::open(cfg, &dir.path().join("journal"), 0).unwrap();
    let server = Server::start("127.0.0.1:0", coord).unwrap();
    let url = server.url();
    let handles: Vec<_> = ["alpha", "beta"]
        .into_iter()
        .map(|id| {
            let mut opts = WorkerOptions::new(url.clone(), id);
            opts.idle_poll = Duration::from_millis(50);
            std::thread::spawn(move || worker_loop(&opts).unwrap())
        })
        .collect();
    for h in handles {
        let summary = h.join().unwrap();
        assert_eq!(summary.rejected, 0);
    }
    let coord = server.shutdown();
    assert!(coord.is_complete());
    for u in &coord.state().units {
        let mut single = SearchConfig::new(bound);
        single.p = p;
        single.rp_begin = u.unit.rp_begin;
        single.rp_end = Some(u.unit.rp_end);
        let out = search(&single).unwrap();
        assert_eq!(u.validated, Some(out.range_digest()), "{}", u.unit.id);
    }
    let whole = search(&SearchConfig::new(bound)).unwrap();
    assert_eq!(coord.solutions(), whole.solutions);
}

#[test]
fn http_errors_are_reported() {
    let coord = Coordinator::in_memory(config(400)).unwrap();
    let server = Server::start("127.0.0.1:0", coord).unwrap();
    let url = server.url();
    let agent = ureq::agent();
    let status = |r: Result<ureq::Response, ureq::Error>| match r {
        Ok(resp) => resp.status(),
        Err(ureq::Error::Status(code, _)) => code,
        Err(e) => panic!("{e}"),
    };
    assert_eq!(status(agent.get(&format!("{url}/v1/work?worker_id=a")).call()), 200);
    assert_eq!(status(agent.get(&format!("{url}/v1/work?worker_id=")).call()), 400);
    assert_eq!(status(agent.get(&format!("{url}/v1/nothing")).call()), 404);
    assert_eq!(status(agent.post(&format!("{url}/v1/result")).send_string("{")), 400);
    let body = serde_json::json!({
        "id": "n1200-p929-0-400", "worker_id": "a", "digest": "xyz",
        "solutions": [], "stats": {"pairs": 0, "probes": 0, "hits": 0}
    });
    assert_eq!(status(agent.post(&format!("{url}/v1/result")).send_json(&body)), 400);
    let forged = serde_json::json!({
        "id": "n1200-p929-0-400", "worker_id": "a", "digest": "0123456789abcdef",
        "solutions": [{"a": 1117, "b": 770, "c": 1092, "d": 861, "e": 602, "f": 212, "g": 85}],
        "stats": {"pairs": 0, "probes": 0, "hits": 0}
    });
    let resp = agent.post(&format!("{url}/v1/result")).send_json(&forged).unwrap();
    assert_eq!(resp.into_string().unwrap(), r#"{"status":"rejected"}"#);
    assert_eq!(status(agent.get(&format!("{url}/v1/work?worker_id=a")).call()), 403);
    assert_eq!(status(agent.get(&format!("{url}/v1/work?worker_id=b")).call()), 200);
    assert_eq!(status(agent.get(&format!("{url}/v1/work?worker_id=c")).call()), 200);
    let st: serde_json::Value = agent
        .get(&format!("{url}/v1/status"))
        .call()
        .unwrap()
        .into_json()
        .unwrap();
    assert_eq!(st["units"], 3);
    assert_eq!(st["validated"], 0);
}

#[test]
fn worker_gives_up_on_a_dead_server() {
    let mut opts = WorkerOptions::new("http://127.0.0.1:9", "lonely");
    opts.max_retries = 2;
    opts.backoff_base = Duration::from_millis(10);
    assert!(matches!(worker_loop(&opts), Err(WorknetError::Network(_))));
}
