//! End-to-end tests of the liectl binary against the bundled fixtures.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liectl"))
}

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    path.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Writes scratch input for a test under a per-name path in the temp dir.
fn temp_file(name: &str, contents: &str) -> String {
    let dir = std::env::temp_dir().join("liectl-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_passes_on_the_unipotent_fixture() {
    let out = run(&["validate", &fixture("sl2_unipotent.json")]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("validation passed"));
}

#[test]
fn validate_fails_on_the_printed_trig_fixture_with_exit_two() {
    let out = run(&["validate", &fixture("sl2_trig_printed.json")]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains("FAIL"));
    assert!(text.contains("b0_identity"));
    assert!(text.contains("validation failed"));
}

#[test]
fn validate_json_output_is_canonical() {
    let out = run(&["validate", &fixture("sl2_unipotent.json"), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(v["passed"], true);
    // Keys are sorted in the canonical rendering.
    assert!(text.find("\"checks\"").unwrap() < text.find("\"passed\"").unwrap());
}

#[test]
fn analyze_reports_controllable_for_the_unipotent_fixture() {
    let out = run(&["analyze", &fixture("sl2_unipotent.json"), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["status"], "controllable");
    assert_eq!(v["certificate"]["k"], 3);
}

#[test]
fn analyze_still_exits_zero_when_the_criterion_fails() {
    let out = run(&["analyze", &fixture("sl2_hyperbolic.json"), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["status"], "criterion-not-met");
    let margin = v["unimodular_margin"].as_f64().unwrap();
    assert!((margin - 3.0).abs() < 1e-9);
}

#[test]
fn analyze_flags_the_printed_trig_fixture_as_invalid() {
    let out = run(&["analyze", &fixture("sl2_trig_printed.json"), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["status"], "invalid-system");
}

#[test]
fn simulate_walks_the_expected_trajectory() {
    let controls = temp_file("walk.controls", "0.25;-0.25\n");
    let out = run(&[
        "simulate",
        &fixture("sl2_unipotent.json"),
        "--controls",
        &controls,
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    let traj = v["trajectory"].as_array().unwrap();
    assert_eq!(traj.len(), 3);
    // Starts at the identity.
    assert_eq!(traj[0][0][0].as_f64().unwrap(), 1.0);
    assert_eq!(traj[0][0][1].as_f64().unwrap(), 0.0);
}

#[test]
fn simulate_accepts_json_controls_and_zero_controls_stay_at_identity() {
    let controls = temp_file("zero.controls", "[[0.0], [0.0], [0.0]]");
    let out = run(&[
        "simulate",
        &fixture("sl2_unipotent.json"),
        "--controls",
        &controls,
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    let traj = v["trajectory"].as_array().unwrap();
    assert_eq!(traj.len(), 4);
    // b(0) = e and conjugation fixes e, so the trajectory never moves.
    for m in traj {
        assert_eq!(m[0][0].as_f64().unwrap(), 1.0);
        assert_eq!(m[0][1].as_f64().unwrap(), 0.0);
        assert_eq!(m[1][0].as_f64().unwrap(), 0.0);
        assert_eq!(m[1][1].as_f64().unwrap(), 1.0);
    }
}

#[test]
fn simulate_rejects_controls_outside_the_box() {
    let controls = temp_file("outside.controls", "0.75");
    let out = run(&[
        "simulate",
        &fixture("sl2_unipotent.json"),
        "--controls",
        &controls,
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("error"), "{err}");
}

#[test]
fn reach_csv_is_identical_across_worker_counts() {
    let base = [
        "reach",
        &fixture("sl2_unipotent.json"),
        "--horizon",
        "2",
        "--strategy",
        "monte-carlo",
        "--samples",
        "50",
        "--seed",
        "7",
    ];
    let one = run(&[&base[..], &["--workers", "1"]].concat());
    let four = run(&[&base[..], &["--workers", "4"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let text = stdout(&one);
    assert!(text.starts_with("k,seq,g11,g12,g21,g22\n"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn reach_writes_the_csv_file_and_prints_a_summary() {
    let out_path = temp_file("reach.csv", "");
    let out = run(&[
        "reach",
        &fixture("sl2_unipotent.json"),
        "--horizon",
        "1",
        "--strategy",
        "mc",
        "--samples",
        "10",
        "--seed",
        "3",
        "--out",
        &out_path,
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(v["rows"], 10);
    assert_eq!(v["strategy"], "monte-carlo");
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("k,seq,g11,g12,g21,g22\n"));
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn reach_refuses_oversized_budgets_with_exit_three() {
    let out = run(&[
        "reach",
        &fixture("sl2_unipotent.json"),
        "--horizon",
        "2",
        "--samples",
        "10000001",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("refused"), "{err}");
}

#[test]
fn duality_identities_hold_on_every_well_posed_fixture() {
    for name in ["sl2_unipotent.json", "sl2_trig_corrected.json", "sl2_hyperbolic.json"] {
        let out = run(&["duality", &fixture(name), "--horizon", "4", "--json"]);
        assert_eq!(out.status.code(), Some(0), "{name}: {out:?}");
        let v: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
        assert_eq!(v["passed"], true, "{name}");
        assert_eq!(v["checks"][0]["name"], "duality", "{name}");
        assert_eq!(v["checks"][1]["name"], "composition", "{name}");
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let out = run(&["analyze", "/nonexistent/system.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn schema_violations_are_io_errors() {
    let dir = std::env::temp_dir().join("liectl-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, r#"{"group": {"kind": "SL", "n": 2}}"#).unwrap();
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
