//! End-to-end runs of the binary.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syncausal")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn enumerate_trivial_has_two_runs() {
    let o = run(&["enumerate", "--scenario", "trivial"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "2");
}

#[test]
fn enumerate_r2_matches_the_bundle_size() {
    let o = run(&["enumerate", "--scenario", "r2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "2");
}

#[test]
fn list_names_every_bundled_scenario() {
    let o = run(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["trivial", "r1", "r3-gor", "judea", "broken-fixture"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn one_criterion_prints_a_passing_table() {
    let o = run(&["check-theorems", "--criterion", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let row = text.lines().find(|l| l.starts_with("1 ")).unwrap();
    assert!(row.ends_with("pass"), "{row}");
}

#[test]
fn gor_on_the_broken_fixture_reports_violations() {
    let o = run(&["gor", "--scenario", "broken-fixture"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gor_on_judea_is_clean() {
    let o = run(&["gor", "--scenario", "judea"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn malformed_scenario_is_a_usage_error() {
    let dir = std::env::temp_dir().join(format!("syncausal-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, "{").unwrap();
    let o = run(&["simulate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unknown_scenario_name_is_a_usage_error() {
    let o = run(&["simulate", "--scenario", "no-such-scenario"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dot_exports_are_digraphs() {
    for args in
        [&["dot", "--scenario", "r3", "--object", "run"][..], &["dot", "--scenario", "judea", "--object", "cro"][..]]
    {
        let o = run(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(text.starts_with("digraph "), "{text}");
        assert!(text.trim_end().ends_with('}'));
    }
}

#[test]
fn simulate_is_deterministic_for_a_seed() {
    let a = run(&["simulate", "--scenario", "r3", "--seed", "11"]);
    let b = run(&["simulate", "--scenario", "r3", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
