//! End-to-end checks of the `kgspec` binary: exit codes, output formats, and
//! the --out file sink.

use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}.kg", env!("CARGO_MANIFEST_DIR"))
}

fn kgspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgspec"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn validate_success_exits_zero() {
    let out = kgspec(&["validate", &fixture("o2")]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("command: validate"));
    assert!(text.contains("pass: true"));
}

#[test]
fn invalid_graph_exits_one() {
    let out = kgspec(&["validate", &fixture("broken-square")]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("square map is not bijective"), "{err}");
}

#[test]
fn failed_verification_exits_two() {
    // An absurd tolerance turns round-off into a verification failure.
    let out = kgspec(&["ck", &fixture("o2"), "--tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("pass: false"));
}

#[test]
fn missing_file_exits_three() {
    let out = kgspec(&["info", "/no/such/file.kg"]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn parse_error_exits_three() {
    let dir = std::env::temp_dir().join("kgspec-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("garbled.kg");
    std::fs::write(&path, "vertices\nedges\nthis is not an edge line\n").unwrap();
    let out = kgspec(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}

#[test]
fn level_too_small_exits_three() {
    let out = kgspec(&["commutators", &fixture("o2"), "--level", "1", "--pair", "e:f"]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("too small"), "{err}");
}

#[test]
fn json_format_is_valid_json_with_schema() {
    let out = kgspec(&["info", &fixture("fib2"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["graph"], "fib2");
    assert_eq!(doc["command"], "info");
    assert_eq!(doc["data"]["rho"].as_array().unwrap().len(), 2);
}

#[test]
fn csv_format_has_header_and_rows() {
    let out = kgspec(&["ck", &fixture("flip23"), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("key,value"));
    assert!(lines.clone().any(|l| l.starts_with("pass,")), "{text}");
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = std::env::temp_dir().join("kgspec-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = kgspec(&[
        "dirac",
        &fixture("o2"),
        "--level",
        "2",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(doc["command"], "dirac");
    assert_eq!(doc["pass"], true);
}

#[test]
fn alpha_and_step_flags_are_honored() {
    let out = kgspec(&[
        "dirac",
        &fixture("flip23"),
        "--level",
        "1",
        "--J",
        "2,1",
        "--alpha",
        "2,1",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["data"]["step"], serde_json::json!([2, 1]));
    // alpha_q = 2q + 1: the q = 1 eigenvalue is 3.
    let eigenvalues: Vec<f64> = doc["data"]["spectrum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["eigenvalue"].as_f64().unwrap())
        .collect();
    assert!(eigenvalues.contains(&3.0), "{eigenvalues:?}");
}
