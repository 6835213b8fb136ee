//! Scenario files on disk, and how loading reports bad input.

use std::path::{Path, PathBuf};

use syncausal::scenario::{bundled, bundled_names, load_scenario, ScenarioError, SCHEMA};

fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

#[test]
fn every_file_on_disk_is_bundled_and_loads() {
    let mut names: Vec<String> = std::fs::read_dir(dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "schema.json")
        .map(|p| {
            let s = load_scenario(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            let b = bundled(p.file_stem().unwrap().to_str().unwrap()).unwrap();
            assert_eq!(s.name, b.name);
            assert_eq!(s.context.horizon, b.context.horizon);
            assert_eq!(s.network().agent_count(), b.network().agent_count());
            s.name
        })
        .collect();
    names.sort();
    let mut want: Vec<String> = bundled_names().map(str::to_string).collect();
    want.sort();
    assert_eq!(names, want);
}

#[test]
fn schema_is_json() {
    let v: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
    assert!(v.get("properties").is_some());
}

#[test]
fn missing_file_is_an_io_error() {
    let e = load_scenario(&dir().join("no-such-file.json")).unwrap_err();
    assert!(matches!(e, ScenarioError::Io { .. }), "{e}");
}

#[test]
fn every_issue_is_reported_with_its_location() {
    let doc = r#"{
      "network": {
        "agents": ["a", "b"],
        "channels": [
          { "from": "a", "to": "zed", "bound": 1 },
          { "from": "b", "to": "a", "bound": 0 }
        ]
      },
      "context": { "horizon": 3, "slots": [] },
      "protocol": { "kind": "full-information" }
    }"#;
    let Err(ScenarioError::Validation(issues)) = syncausal::scenario::Scenario::from_json(doc) else {
        panic!("expected validation errors")
    };
    let locations: Vec<&str> = issues.iter().map(|i| i.location.as_str()).collect();
    assert!(locations.iter().any(|l| l.starts_with("network.channels[0]")), "{locations:?}");
    assert!(locations.iter().any(|l| l.starts_with("network.channels[1]")), "{locations:?}");
}

#[test]
fn syntax_errors_carry_a_position() {
    let e = syncausal::scenario::Scenario::from_json("{\n  \"network\": [,]\n}").unwrap_err();
    let ScenarioError::Parse { line, .. } = e else { panic!("{e}") };
    assert_eq!(line, 2);
}
