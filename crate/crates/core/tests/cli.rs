use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"{"data": {"gesture": {"geometry": "32x32", "blob_radius": 2.0, "events_per_ms": 2.0}},
    "mine": {"hidden": [16, 16], "batch_size": 4, "steps": 40, "eval_every": 20}}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_event-tsr"))
        .current_dir(dir)
        .args(args)
        .env("EVENT_TSR_THREADS", "1")
        .output()
        .unwrap()
}

fn run_ok(dir: &Path, args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--config", "config.json", "--report", "report.json"]);
    let out = run(dir, &full);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.json"), SMALL).unwrap();
    dir
}

fn synth(dir: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["synth", "--classes", "3", "--per-class", "5", "--seed", "1", "--out", "data"];
    args.extend(extra);
    run_ok(dir, &args)
}

#[test]
fn synth_writes_every_recording_and_a_manifest() {
    let dir = workspace();
    let report = synth(dir.path(), &[]);
    assert_eq!(report["metrics"]["recordings"], 15);
    assert_eq!(report["metrics"]["with_hotspot"], 0);
    let manifest: Vec<Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("data/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.len(), 15);
    for e in &manifest {
        assert!(dir.path().join("data").join(e["path"].as_str().unwrap()).exists());
    }
    assert!(report["version"].as_str().unwrap().starts_with('v'));
}

#[test]
fn hotspot_marks_only_training_recordings() {
    let dir = workspace();
    synth(dir.path(), &["--hotspot-train-only"]);
    let manifest: Vec<Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("data/manifest.json")).unwrap()).unwrap();
    for e in &manifest {
        assert_eq!(e["hotspot"].as_bool().unwrap(), e["split"] == "train", "{e}");
    }
}

#[test]
fn csv_roundtrip_through_ingest() {
    let dir = workspace();
    synth(dir.path(), &["--format", "csv"]);
    let report = run_ok(
        dir.path(),
        &["ingest", "--input", "data/rec_0000.csv", "--geometry", "32x32", "--out", "copy.evt"],
    );
    let again = run_ok(dir.path(), &["ingest", "--input", "copy.evt"]);
    assert_eq!(report["metrics"]["events"], again["metrics"]["events"]);
    assert_eq!(again["metrics"]["geometry"], "32x32");
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = workspace();
    let out = run(dir.path(), &["ingest", "--input", "nope.evt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    let out = run(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mi_of_a_matrix_with_itself_is_entropy_mode() {
    let dir = workspace();
    synth(dir.path(), &[]);
    run_ok(dir.path(), &["decompose", "--manifest", "data/manifest.json", "--out", "dec", "--video-downsample", "4x4"]);
    let report = run_ok(
        dir.path(),
        &["mi", "--x", "dec/labels.fea", "--y", "dec/labels.fea", "--out", "h.json"],
    );
    assert_eq!(report["metrics"]["entropy_mode"], true);
    let file: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("h.json")).unwrap()).unwrap();
    assert!(file["mi_nats"].as_f64().unwrap().is_finite());
    assert!(!file["curve"].as_array().unwrap().is_empty());
}

#[test]
fn eval_rejects_a_model_from_another_geometry() {
    let dir = workspace();
    synth(dir.path(), &[]);
    run_ok(dir.path(), &["train", "--manifest", "data/manifest.json", "--model", "m.rdg", "--downsample", "8x8"]);
    let report = run_ok(dir.path(), &["eval", "--manifest", "data/manifest.json", "--model", "m.rdg", "--out", "ev"]);
    assert!(report["metrics"]["test"]["accuracy"].as_f64().is_some());
    let csv = std::fs::read_to_string(dir.path().join("ev/confusion.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    // a model trained at another resolution, swapped in under the old sidecar
    run_ok(dir.path(), &["train", "--manifest", "data/manifest.json", "--model", "big.rdg", "--downsample", "16x16"]);
    std::fs::copy(dir.path().join("big.rdg"), dir.path().join("m.rdg")).unwrap();
    let out = run(dir.path(), &["eval", "--manifest", "data/manifest.json", "--model", "m.rdg", "--out", "ev"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sidecar"));
}

#[test]
fn sweep_writes_one_row_per_resolution() {
    let dir = workspace();
    synth(dir.path(), &[]);
    run_ok(
        dir.path(),
        &["sweep-downsample", "--manifest", "data/manifest.json", "--resolutions", "32,16,4", "--out", "s.csv"],
    );
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "resolution,accuracy");
    assert_eq!(lines.len(), 4);
    for (line, r) in lines[1..].iter().zip(["32", "16", "4"]) {
        let (res, acc) = line.split_once(',').unwrap();
        assert_eq!(res, r);
        assert!((0.0..=1.0).contains(&acc.parse::<f64>().unwrap()));
    }
}

#[test]
fn frames_honour_window_overrides() {
    let dir = workspace();
    synth(dir.path(), &[]);
    let report = run_ok(
        dir.path(),
        &["frames", "--input", "data/rec_0000.evt", "--window-us", "10000", "--num-frames", "50", "--out", "f.frm"],
    );
    assert_eq!(report["metrics"]["frames"], 50);
    assert_eq!(report["config"]["decompose"]["window_us"], 10000);
}
