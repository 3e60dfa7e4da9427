use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spectral-accel"))
}

fn run(cmd: &mut Command) {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn gen_then_cluster_moons() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(bin()
        .args(["gen", "two-moons", "--n", "500", "--noise", "0.08", "--seed", "3", "--out"])
        .arg(d));
    assert!(d.join("points.csv").exists() && d.join("truth.csv").exists());
    write(&d.join("cfg.json"), r#"{"id":"exact","k":2,"k_nn":5}"#);
    run(bin()
        .args(["cluster", "--config"])
        .arg(d.join("cfg.json"))
        .arg("--points")
        .arg(d.join("points.csv"))
        .arg("--truth")
        .arg(d.join("truth.csv"))
        .arg("--out")
        .arg(d));
    let labels = std::fs::read_to_string(d.join("labels.csv")).unwrap();
    assert!(labels.starts_with("point_id,label\n"));
    assert_eq!(labels.lines().count(), 501);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("summary.json")).unwrap()).unwrap();
    assert!(summary["misclustering_rate"].as_f64().unwrap() < 0.05);
}

#[test]
fn bench_report_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(
        &d.join("bench.json"),
        r#"{
  "dataset": {"kind": "sbm", "n": 90, "k": 3, "p_in": 0.4, "p_out": 0.02},
  "repeats": 2,
  "methods": [
    {"id": "exact", "k": 3},
    {"id": "kasp", "k": 3, "kernel": {"method": "kasp", "m": 0.5}},
    {"id": "gsp", "k": 3, "variant": "normalized", "kmeans": {"method": "gsp", "m": 30, "sampling": "leverage"}}
  ]
}"#,
    );
    let mut reports = Vec::new();
    for threads in ["1", "2"] {
        let out = d.join(format!("t{threads}"));
        run(bin()
            .args(["bench", "--seed", "9", "--threads", threads, "--config"])
            .arg(d.join("bench.json"))
            .arg("--out")
            .arg(&out));
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        for r in v["runs"].as_array_mut().unwrap() {
            r["wall_time_ms"] = serde_json::Value::Null;
            assert!(r["error"].is_null(), "{r}");
        }
        assert!(out.join("report.csv").exists());
        reports.push(v);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn threads_from_env() {
    let dir = tempfile::tempdir().unwrap();
    run(bin()
        .env("SPEC_THREADS", "1")
        .args(["gen", "sbm", "--n", "30", "--out"])
        .arg(dir.path()));
    assert!(dir.path().join("graph.edges").exists());
}

#[test]
fn invalid_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    run(bin().args(["gen", "sbm", "--n", "30", "--out"]).arg(d));
    write(&d.join("cfg.json"), r#"{"id":"bad","k":2,"kernel":{"method":"rff","m":10}}"#);
    let out = bin()
        .args(["cluster", "--config"])
        .arg(d.join("cfg.json"))
        .arg("--edges")
        .arg(d.join("graph.edges"))
        .arg("--out")
        .arg(d)
        .output()
        .unwrap();
    assert!(!out.status.success());
}
