use eulersieve::catalog;
use eulersieve::engine::{search, EngineError, SearchConfig};
use eulersieve::oracle::{oracle_search, OracleLimits};

fn config(bound: u32) -> SearchConfig {
    SearchConfig::new(bound)
}

#[test]
fn small_bounds_agree_with_oracle() {
    for bound in [100, 250] {
        let mut cfg = config(bound);
        cfg.flags.include_imprimitive = true;
        let out = search(&cfg).unwrap();
        assert_eq!(out.solutions, oracle_search(bound, &OracleLimits::default()).unwrap());
        assert!(out.solutions.is_empty());
    }
}

#[test]
fn checkpoint_resume_gives_the_same_answer() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("n1200.ckpt");
    let fresh = search(&config(1200)).unwrap();

    let mut part = config(1200);
    part.rp_begin = 100;
    part.rp_end = Some(500);
    part.checkpoint = Some(ckpt.clone());
    let first = search(&part).unwrap();
    assert_eq!(first.resumed_units(), 0);

    // A write cut short mid-record is dropped on reopen.
    let mut text = std::fs::read_to_string(&ckpt).unwrap();
    text.push_str("rp=999 digest=00000000");
    std::fs::write(&ckpt, text).unwrap();

    let mut full = config(1200);
    full.checkpoint = Some(ckpt.clone());
    full.threads = 2;
    let resumed = search(&full).unwrap();
    assert_eq!(resumed.resumed_units(), 400);
    assert_eq!(resumed.solutions, fresh.solutions);
    assert_eq!(resumed.units.len(), fresh.units.len());
    assert_eq!(resumed.range_digest(), fresh.range_digest());
    assert_eq!(resumed.solutions.len(), 1);

    // Everything is done now; a third run computes nothing.
    let again = search(&full).unwrap();
    assert_eq!(again.resumed_units(), again.units.len());
    assert_eq!(again.stats.probes, 0);

    let mut other = config(1200);
    other.flags.t_filter = false;
    other.checkpoint = Some(ckpt);
    assert!(matches!(search(&other), Err(EngineError::CheckpointMismatch { .. })));
}

#[test]
fn thread_count_and_batch_size_do_not_change_results() {
    let mut base = config(900);
    base.rp_end = Some(60);
    let expected = search(&base).unwrap();
    for (threads, batch) in [(3, 0), (1, 5000), (2, 1)] {
        let mut cfg = base.clone();
        cfg.threads = threads;
        cfg.batch_entries = batch;
        let out = search(&cfg).unwrap();
        assert_eq!(out.units, expected.units, "threads={threads} batch={batch}");
        assert_eq!(out.stats, expected.stats);
    }
}

#[test]
fn first_solution_collapses_from_several_residues() {
    let out = search(&config(1200)).unwrap();
    assert_eq!(out.solutions, vec![catalog::bundled()[0].solution]);
    let raw: usize = out.units.iter().map(|u| u.solutions).sum();
    assert!(raw >= 2, "found under {raw} labelings");
    assert!(out.relations.is_empty());
}

#[test]
fn bad_configs_are_refused() {
    let mut cfg = config(1200);
    cfg.p = 13;
    assert!(matches!(search(&cfg), Err(EngineError::Numthy(_))));
    let mut cfg = config(1200);
    cfg.rp_begin = 5;
    cfg.rp_end = Some(4);
    assert!(matches!(search(&cfg), Err(EngineError::Config(_))));
    let mut cfg = config(1200);
    cfg.rp_end = Some(100_000);
    assert!(matches!(search(&cfg), Err(EngineError::Config(_))));
    assert!(matches!(search(&config(0)), Err(EngineError::Config(_))));
    assert!(matches!(search(&config(250_001)), Err(EngineError::Config(_))));
}
