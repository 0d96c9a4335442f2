use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_edgeindex"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("config.json");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    let out = cmd.output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

fn read(dir: &Path, file: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out").join(file)).unwrap()).unwrap()
}

const STRIP: &str = r#""flux": "1/3", "shape": {"kind": "strip", "x0": 0, "width": 30}, "size": [30, 60]"#;

#[test]
fn bulk_third_flux_chern_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(dir.path(), &["bulk"], Some(r#"{"schema_version": 1, "flux": "1/3"}"#));
    assert_eq!(code, 0, "{out}");
    let doc = read(dir.path(), "chern.json");
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["chern"]["per_band"], serde_json::json!([1, -2, 1]));
    assert!(dir.path().join("out/spectrum.csv").exists());
    assert!(dir.path().join("out/spectrum.svg").exists());
}

#[test]
fn bulk_zero_flux_is_one_trivial_band() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dir.path(), &["bulk"], Some(r#"{"schema_version": 1, "flux": "0"}"#));
    assert_eq!(code, 0);
    assert_eq!(read(dir.path(), "chern.json")["chern"]["per_band"], serde_json::json!([0]));
}

#[test]
fn non_reduced_flux_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dir.path(), &["bulk"], Some(r#"{"schema_version": 1, "flux": "2/4"}"#));
    assert_eq!(code, 2);
}

#[test]
fn quarter_flux_is_gapless() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dir.path(), &["bulk"], Some(r#"{"schema_version": 1, "flux": "1/4", "size": [32, 32]}"#));
    assert_eq!(code, 3);
}

#[test]
fn unknown_suite_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["suite", "nope"], None).0, 2);
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(dir.path(), &["suite", "shifts"], Some(r#"{"schema_version": 1, "colour": 3}"#));
    assert_eq!(code, 2);
}

#[test]
fn cut_along_the_boundary_is_inadmissible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"schema_version": 1, {STRIP}, "cut": {{"kind": "vertical", "x": 1}}}}"#);
    let (code, _) = run(dir.path(), &["index"], Some(&cfg));
    assert_eq!(code, 4);
    let doc = read(dir.path(), "admissibility.json");
    assert_eq!(doc["admissibility"]["admissible"], false);
}

#[test]
fn strip_index_matches_expected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"schema_version": 1, {STRIP}, "cut": {{"kind": "horizontal", "y": 30}}, "expected": [1, -1]}}"#);
    let (code, out) = run(dir.path(), &["index"], Some(&cfg));
    assert_eq!(code, 0, "{out}");
    let doc = read(dir.path(), "index.json");
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["report"]["crossings"].as_array().unwrap().len(), 2);

    let wrong = format!(r#"{{"schema_version": 1, {STRIP}, "cut": {{"kind": "horizontal", "y": 30}}, "expected": [-1, 1]}}"#);
    assert_eq!(run(dir.path(), &["index"], Some(&wrong)).0, 5);
}

#[test]
fn torus_index_report_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"schema_version": 1, "flux": "1/3", "shape": {"kind": "torus"}, "size": [30, 30],
                  "cut": {"kind": "horizontal", "y": 15}}"#;
    let (code, _) = run(dir.path(), &["index"], Some(cfg));
    assert_eq!(code, 0);
    let doc = read(dir.path(), "index.json");
    assert!(doc["report"]["crossings"].as_array().unwrap().is_empty());
    assert_eq!(doc["report"]["theta"], 0.0);
}

#[test]
fn identity_projection_carries_no_current() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"schema_version": 1, {STRIP}, "cut": {{"kind": "horizontal", "y": 30}}, "identity_projection": true, "tolerance": 1e-9}}"#
    );
    let (code, out) = run(dir.path(), &["current"], Some(&cfg));
    assert_eq!(code, 0, "{out}");
    assert!(dir.path().join("out/current_density.csv").exists());
}

#[test]
fn shifts_suite_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out) = run(dir.path(), &["suite", "shifts", "--jobs", "1"], None);
    assert_eq!(code, 0, "{out}");
    let doc = read(dir.path(), "report.json");
    assert_eq!(doc["suite"], "shifts");
    assert_eq!(doc["passed"], true);
}
