use std::fs;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn vsm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vsm-actr"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .env_remove("VSM_ACTR_BRIDGE")
        .output()
        .expect("spawn vsm-actr")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = vsm(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn small_pipeline(dir: &Path) {
    ok(dir, &["simulate", "--sets", "4", "--runs", "2", "--trials", "8"]);
    ok(dir, &["distill"]);
    ok(dir, &["embed", "--dim", "8"]);
    ok(dir, &["reduce"]);
    ok(dir, &["build-dataset"]);
    ok(dir, &["eval", "--folds", "2"]);
    ok(dir, &["analyze"]);
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn one_set_one_run_one_trial() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["simulate", "--sets", "1", "--runs", "1", "--trials", "1"]);
    assert_eq!(data_rows(&tmp.path().join("outcomes.csv")), 1);
    let index = fs::read_to_string(tmp.path().join("traces/index.csv")).unwrap();
    assert_eq!(index.lines().count(), 2);
    assert!(tmp.path().join("traces/s0r0.txt").is_file());
}

#[test]
fn bad_config_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "no_such_key = 3\n").unwrap();
    let out = vsm(tmp.path(), &["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(out.status.code(), Some(2));

    fs::write(&cfg, "[reduce]\nthreshold = 1.5\n").unwrap();
    let out = vsm(tmp.path(), &["--config", cfg.to_str().unwrap(), "reduce"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_upstream_exits_4() {
    let tmp = TempDir::new().unwrap();
    for stage in ["distill", "embed", "reduce", "build-dataset", "eval", "analyze"] {
        let out = vsm(tmp.path(), &[stage]);
        assert_eq!(out.status.code(), Some(4), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unreachable_bridge_exits_5() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["simulate", "--sets", "1", "--runs", "1", "--trials", "2"]);
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let provider = format!("bridge:tcp://127.0.0.1:{port}");
    let out = vsm(tmp.path(), &["embed", "--provider", &provider]);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));

    let out = Command::new(env!("CARGO_BIN_EXE_vsm-actr"))
        .arg("--out")
        .arg(tmp.path())
        .args(["embed", "--provider", "bridge"])
        .env("VSM_ACTR_BRIDGE", format!("127.0.0.1:{port}"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn multi_targets_cover_six_classes_at_most() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["simulate", "--sets", "4", "--runs", "2", "--trials", "8"]);
    ok(tmp.path(), &["distill", "--mode", "multi"]);
    let mut rdr = csv::Reader::from_path(tmp.path().join("selected.csv")).unwrap();
    let mut n = 0;
    for rec in rdr.records() {
        let t: u8 = rec.unwrap()[5].parse().unwrap();
        assert!(t < 6);
        n += 1;
    }
    assert_eq!(n, data_rows(&tmp.path().join("outcomes.csv")));
}

#[test]
fn reduce_records_threshold_and_keeps_enough_variance() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["simulate", "--sets", "2", "--runs", "2", "--trials", "4"]);
    ok(tmp.path(), &["embed", "--dim", "8"]);
    ok(tmp.path(), &["reduce", "--threshold", "0.7"]);
    let reduced = fs::read_to_string(tmp.path().join("embeddings/reduced.matrix")).unwrap();
    assert!(reduced.contains("threshold"));
    let holistic = tmp.path().join("embeddings/holistic.matrix");
    assert!(holistic.is_file());
}

#[test]
fn eval_reports_chance_row() {
    let tmp = TempDir::new().unwrap();
    small_pipeline(tmp.path());
    let report = fs::read_to_string(tmp.path().join("report.txt")).unwrap();
    let chance = report.lines().find(|l| l.starts_with("chance (2 classes)")).unwrap();
    assert!(chance.contains("0.6931"), "{chance}");
    assert!(chance.contains("0.5"));
    assert!(data_rows(&tmp.path().join("metrics.csv")) == 2);
    let progression = fs::read_to_string(tmp.path().join("progression.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&progression).unwrap();
    assert!(v["outcomes"].as_u64().unwrap() > 0);
}

#[test]
fn prompt_mode_mismatch_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["simulate", "--sets", "2", "--runs", "1", "--trials", "2"]);
    ok(tmp.path(), &["embed", "--dim", "4", "--mode", "single"]);
    let out = vsm(tmp.path(), &["build-dataset", "--mode", "multi"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_export_round_trips_through_eval() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["simulate", "--sets", "4", "--runs", "2", "--trials", "8"]);
    ok(tmp.path(), &["embed", "--dim", "4"]);
    ok(tmp.path(), &["build-dataset", "--format", "csv"]);
    assert!(tmp.path().join("train.csv").is_file());
    ok(tmp.path(), &["eval", "--format", "csv", "--folds", "2"]);
}

fn manifest_sums(dir: &Path) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut names: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("manifest-"))
        .collect();
    names.sort();
    for name in names {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join(&name)).unwrap()).unwrap();
        for entry in v["outputs"].as_array().unwrap() {
            out.push((
                entry["path"].as_str().unwrap().to_string(),
                entry["sha256"].as_str().unwrap().to_string(),
            ));
        }
    }
    out
}

#[test]
fn pipeline_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    small_pipeline(a.path());
    small_pipeline(b.path());
    let sums = manifest_sums(a.path());
    assert!(sums.len() > 10);
    assert_eq!(sums, manifest_sums(b.path()));
}
