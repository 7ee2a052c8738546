use std::path::Path;
use std::process::{Command, Output};

fn eulersieve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eulersieve"))
        .args(args)
        .output()
        .expect("run eulersieve")
}

fn appendix() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/appendix.txt")
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_bundled_catalog() {
    let out = eulersieve(&["verify", &appendix()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("377 solutions verified"), "{}", stdout(&out));
}

#[test]
fn verify_flags_a_broken_tuple() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    std::fs::write(&file, "1117^6+770^6=1092^6+861^6+602^6+212^6+85^6\n").unwrap();
    let out = eulersieve(&["verify", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn search_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for (i, threads) in ["1", "3"].into_iter().enumerate() {
        let path = dir.path().join(format!("out{i}.jsonl"));
        let out = eulersieve(&[
            "search",
            "--limit",
            "1200",
            "--threads",
            threads,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        bodies.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    let text = String::from_utf8(bodies.remove(0)).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("\"a\":1117"), "{text}");

    let file = dir.path().join("out0.jsonl");
    let against = dir.path().join("out1.jsonl");
    let out = eulersieve(&[
        "verify",
        file.to_str().unwrap(),
        "--limit",
        "1200",
        "--against",
        against.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = eulersieve(&["verify", file.to_str().unwrap(), "--limit", "1000"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn argument_errors_exit_with_two() {
    for args in [
        &["search", "--limit", "1200", "--rp", "5..4"][..],
        &["search", "--limit", "1200", "--prime", "13"],
        &["search"],
        &["oracle", "--limit", "100000"],
        &["frobnicate"],
    ] {
        assert_eq!(eulersieve(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn missing_file_exits_with_three() {
    let out = eulersieve(&["verify", "/nonexistent/catalog.txt"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn checkpoint_from_other_flags_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("run.ckpt");
    let ck = ckpt.to_str().unwrap();
    let first = eulersieve(&["search", "--limit", "400", "--rp", "0..20", "--checkpoint", ck]);
    assert_eq!(first.status.code(), Some(0));
    let other = eulersieve(&["search", "--limit", "400", "--checkpoint", ck, "--no-t-filter"]);
    assert_eq!(other.status.code(), Some(2));
    let resumed = eulersieve(&["search", "--limit", "400", "--checkpoint", ck]);
    assert_eq!(resumed.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&resumed.stderr).contains("resumed=20"));
}

#[test]
fn worker_against_dead_server_exits_with_four() {
    let out = eulersieve(&["work", "--server", "http://127.0.0.1:9", "--retries", "0"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn oracle_prints_nothing_below_the_first_solution() {
    let out = eulersieve(&["oracle", "--limit", "150"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
}

#[test]
fn quick_selftest_passes() {
    let out = eulersieve(&["selftest", "--quick"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).lines().all(|l| l.starts_with("PASS")));
}
