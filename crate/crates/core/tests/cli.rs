//! The `realps` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use realps::record::read_jsonl_file;
use realps::runner::{read_json, RunManifest};
use realps::tilting::{SchemeDocument, TemperingScheme};
use serde_json::{json, Value};

fn single_gaussian(extra: Value) -> Value {
    let mut cfg = json!({
        "target": {"type": "gaussian_mixture", "means": [[0.0]],
                   "covariances": [[[1.0]]], "weights": [1.0]},
        "ladder": {"betas": [1.0, 0.0]},
        "kernel": {"lambda_swap": 1.0, "gamma_leap": 1.0, "rwm_step_scale": 2.0, "steps_per_unit_time": 10},
        "learning": {"samples": 400, "stage_duration": 400.0},
        "sampling": {"duration": 200.0},
        "grid": {"lo": [-8.0], "hi": [8.0], "points": 801}
    });
    let (Value::Object(base), Value::Object(more)) = (&mut cfg, extra) else {
        unreachable!()
    };
    base.extend(more);
    cfg
}

fn realps(cmd: &str, config: &Value, dir: &Path, args: &[&str]) -> Output {
    std::fs::create_dir_all(dir).unwrap();
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_realps"))
        .arg(cmd)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn train_writes_a_loadable_scheme() {
    let dir = tempfile::tempdir().unwrap();
    let out = realps(
        "train",
        &single_gaussian(json!({})),
        dir.path(),
        &["--seed", "3"],
    );
    ok(&out);
    let doc: SchemeDocument = read_json(&dir.path().join("out/scheme.json")).unwrap();
    let scheme = TemperingScheme::from_document(&doc).unwrap();
    assert_eq!(scheme.levels(), 2);
    assert_eq!(scheme.to_document(), doc);

    let manifest: RunManifest = read_json(&dir.path().join("out/manifest.json")).unwrap();
    assert!(manifest.verify());
    assert_eq!(manifest.config.seed, 3);
    assert!(manifest.artifacts.contains(&"trace.json".to_string()));
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = single_gaussian(json!({}));
    let read = |dir: &Path| {
        ["scheme.json", "trace.json", "samples.jsonl", "summary.json"]
            .map(|f| std::fs::read(dir.join("out").join(f)).unwrap())
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        ok(&realps("train", &cfg, d, &["--seed", "11"]));
        ok(&realps(
            "sample",
            &cfg,
            d,
            &["--seed", "11", "--replicas", "2"],
        ));
    }
    assert_eq!(read(a.path()), read(b.path()));

    let c = tempfile::tempdir().unwrap();
    ok(&realps("train", &cfg, c.path(), &["--seed", "12"]));
    let sa = std::fs::read(a.path().join("out/scheme.json")).unwrap();
    let sc = std::fs::read(c.path().join("out/scheme.json")).unwrap();
    assert_ne!(sa, sc);
}

#[test]
fn starved_level_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = single_gaussian(json!({
        "kernel": {"lambda_swap": 1e-9, "gamma_leap": 1.0, "rwm_step_scale": 2.0, "steps_per_unit_time": 10}
    }));
    let out = realps("train", &cfg, dir.path(), &[]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("starved"), "stderr: {err}");
}

#[test]
fn sample_without_a_scheme_names_the_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = realps("sample", &single_gaussian(json!({})), dir.path(), &[]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("scheme.json"), "stderr: {err}");
}

#[test]
fn compare_needs_two_schemes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = single_gaussian(json!({"schemes": ["re_alps"]}));
    let out = realps("compare", &cfg, dir.path(), &[]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration error"));
}

#[test]
fn single_level_without_thinning_keeps_every_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = single_gaussian(json!({"ladder": {"betas": [0.0]}}));
    std::fs::create_dir_all(dir.path().join("out")).unwrap();
    let doc = SchemeDocument {
        betas: vec![0.0],
        centers: vec![vec![0.0]],
        w: vec![vec![1.0]],
        r: vec![1.0],
    };
    realps::runner::write_json(&dir.path().join("out/scheme.json"), &doc).unwrap();
    ok(&realps("sample", &cfg, dir.path(), &["--seed", "2"]));
    let batch = read_jsonl_file(&dir.path().join("out/samples.jsonl")).unwrap();
    let summary: Value = read_json(&dir.path().join("out/summary.json")).unwrap();
    let counts = &summary["counts"]["counts"];
    let events: u64 = counts
        .as_object()
        .unwrap()
        .values()
        .map(|v| v.as_u64().unwrap())
        .sum();
    // The initial state plus one per event.
    assert_eq!(batch.len() as u64, events + 1);
    assert!(batch.len() >= 2000);
}

#[test]
fn retained_count_tracks_target_occupancy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = single_gaussian(json!({"sampling": {"duration": 4000.0}}));
    ok(&realps("train", &cfg, dir.path(), &["--seed", "5"]));
    ok(&realps("sample", &cfg, dir.path(), &["--seed", "5"]));
    let batch = read_jsonl_file(&dir.path().join("out/samples.jsonl")).unwrap();
    let summary: Value = read_json(&dir.path().join("out/summary.json")).unwrap();
    let counts = summary["counts"]["counts"].as_object().unwrap();
    let events: u64 = counts.values().map(|v| v.as_u64().unwrap()).sum();
    let scheme = read_json::<SchemeDocument>(&dir.path().join("out/scheme.json")).unwrap();
    assert_eq!(scheme.r.len(), 2);
    // Both levels hold about half the time after rebalancing.
    let frac = batch.len() as f64 / events as f64;
    assert!((frac - 0.5).abs() < 0.05, "retained fraction {frac}");
}
