//! End-to-end runs of the `gnnlab` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gnnlab")
}

fn run(out_dir: &Path, extra: &[&str], command: &str, config: &Path) -> Output {
    Command::new(bin())
        .arg("--out")
        .arg(out_dir)
        .args(extra)
        .arg(command)
        .arg(config)
        .output()
        .expect("binary runs")
}

fn write_cfg(dir: &Path, name: &str, cfg: &Value) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn toy_train_cfg(max_epochs: usize, subgraph_sampler: Value) -> Value {
    json!({
        "schema_version": 1,
        "dataset": "toy",
        "model": {"arch": "gcn", "dims": [8, 8], "init_seed": 1},
        "train": {
            "lr": 0.05, "optimizer": "adam", "epsilon": 0.0,
            "max_epochs": max_epochs,
            "sampler": {
                "node_sampler": "uniform", "batch_size": 8,
                "comp_sampler": "full",
                "subgraph_sampler": subgraph_sampler,
                "resample_interval": 1
            },
            "loss": "nll", "seed": 0,
            "deterministic": true, "max_redraws": 16
        }
    })
}

fn manifest(out_dir: &Path) -> Value {
    let text = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn train_toy_writes_all_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(dir.path(), "cfg.json", &toy_train_cfg(5, json!("whole_graph")));
    let out = dir.path().join("run");

    let res = run(&out, &[], "train", &cfg);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));

    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let rows = metrics.lines().count() - 1;
    assert_eq!(rows, 5);
    assert!(out.join("checkpoint.bin").is_file());

    let m = manifest(&out);
    assert_eq!(m["completed"], json!(true));
    assert_eq!(m["command"], json!("train"));
    assert!(m["dataset_checksum"].as_str().unwrap().len() == 64);
    let outputs: Vec<&str> =
        m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(outputs.contains(&"metrics.csv") && outputs.contains(&"checkpoint.bin"));
}

#[test]
fn seed_flag_overrides_config_and_reruns_identically() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "cfg.json",
        &toy_train_cfg(6, json!({"bfs": {"max_nodes": 12}})),
    );

    let mut bytes = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let res = run(&out, &["--seed", "7"], "train", &cfg);
        assert!(res.status.success());
        bytes.push(std::fs::read(out.join("metrics.csv")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);

    let out = dir.path().join("c");
    let res = run(&out, &["--seed", "8"], "train", &cfg);
    assert!(res.status.success());
    let other = std::fs::read(out.join("metrics.csv")).unwrap();
    assert_ne!(bytes[0], other);
}

#[test]
fn missing_dataset_directory_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut cfg = toy_train_cfg(2, json!("whole_graph"));
    cfg["dataset"] = json!({"files": {"dir": dir.path().join("nowhere")}});
    let cfg = write_cfg(dir.path(), "cfg.json", &cfg);
    let res = run(&dir.path().join("run"), &[], "train", &cfg);
    assert_eq!(res.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&res.stderr).is_empty());
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut cfg = toy_train_cfg(2, json!("whole_graph"));
    cfg["surprise"] = json!(1);
    let cfg = write_cfg(dir.path(), "cfg.json", &cfg);
    let res = run(&dir.path().join("run"), &[], "train", &cfg);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn wrong_schema_version_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let mut cfg = toy_train_cfg(2, json!("whole_graph"));
    cfg["schema_version"] = json!(99);
    let cfg = write_cfg(dir.path(), "cfg.json", &cfg);
    let res = run(&dir.path().join("run"), &[], "train", &cfg);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn gradcheck_passes_by_default_and_fails_when_corrupted() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "cfg.json",
        &json!({
            "schema_version": 1,
            "gradcheck": {"nodes": 12, "seed": 3}
        }),
    );
    let out = dir.path().join("ok");
    let res = run(&out, &[], "gradcheck", &cfg);
    assert!(
        res.status.success(),
        "stderr: {} stdout: {}",
        String::from_utf8_lossy(&res.stderr),
        String::from_utf8_lossy(&res.stdout)
    );
    assert!(out.join("gradcheck_report.json").is_file());

    let cfg = write_cfg(
        dir.path(),
        "bad.json",
        &json!({
            "schema_version": 1,
            "gradcheck": {"nodes": 12, "seed": 3, "corrupt_gradient": true}
        }),
    );
    let res = run(&dir.path().join("bad"), &[], "gradcheck", &cfg);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stdout).contains("FAILED"));
}

fn write_triangle_dataset(dir: &Path) {
    std::fs::write(dir.join("edges.txt"), "0 1\n1 2\n0 2\n").unwrap();
    std::fs::write(dir.join("features.csv"), "1\n1\n1\n").unwrap();
    std::fs::write(dir.join("labels.txt"), "0\n0\n0\n").unwrap();
    std::fs::write(dir.join("splits.txt"), "train 0\ntrain 1\ntest 2\n").unwrap();
}

#[test]
fn triangle_census_is_a_single_signature() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    write_triangle_dataset(&data);

    for radius in [1, 0] {
        let cfg = write_cfg(
            dir.path(),
            &format!("cfg{radius}.json"),
            &json!({
                "schema_version": 1,
                "dataset": {"files": {"dir": data}},
                "census": {"radius": radius}
            }),
        );
        let out = dir.path().join(format!("run{radius}"));
        let res = run(&out, &[], "census", &cfg);
        assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
        let tsv = std::fs::read_to_string(out.join("census.tsv")).unwrap();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 1, "radius {radius}: {tsv}");
        assert!(lines[0].ends_with("\t1"), "radius {radius}: {tsv}");
    }
}

#[test]
fn compare_with_whole_graph_sized_bfs_has_zero_gap() {
    let dir = TempDir::new().unwrap();
    let mut cfg = toy_train_cfg(6, json!({"bfs": {"max_nodes": 20}}));
    cfg["compare"] = json!({"seeds": [0, 1]});
    let cfg = write_cfg(dir.path(), "cfg.json", &cfg);
    let out = dir.path().join("run");
    let res = run(&out, &[], "compare", &cfg);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));

    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("compare_report.json")).unwrap(),
    )
    .unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row["gap_points"].as_f64().unwrap(), 0.0);
        assert_eq!(row["norm_ratio"].as_f64().unwrap(), 1.0);
    }
    assert_eq!(report["median_gap_points"].as_f64().unwrap(), 0.0);
    for seed in [0, 1] {
        assert!(out.join(format!("full_seed{seed}.csv")).is_file());
        assert!(out.join(format!("sub_seed{seed}.csv")).is_file());
    }
}

#[test]
fn gen_then_reload_preserves_the_checksum() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "gen.json",
        &json!({"schema_version": 1, "dataset": "toy"}),
    );
    let gen_out = dir.path().join("gen");
    let res = run(&gen_out, &[], "gen", &cfg);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    for name in ["edges.txt", "features.csv", "labels.txt", "splits.txt"] {
        assert!(gen_out.join("dataset").join(name).is_file(), "{name}");
    }
    let gen_checksum = manifest(&gen_out)["dataset_checksum"].clone();

    let cfg = write_cfg(
        dir.path(),
        "reload.json",
        &json!({
            "schema_version": 1,
            "dataset": {"files": {"dir": gen_out.join("dataset")}},
            "census": {"radius": 0}
        }),
    );
    let census_out = dir.path().join("census");
    let res = run(&census_out, &[], "census", &cfg);
    assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(manifest(&census_out)["dataset_checksum"], gen_checksum);
}

#[test]
fn echoed_manifest_config_reruns_identically() {
    let dir = TempDir::new().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "cfg.json",
        &toy_train_cfg(4, json!({"bfs": {"max_nodes": 14}})),
    );
    let out_a = dir.path().join("a");
    assert!(run(&out_a, &[], "train", &cfg).status.success());

    let echoed = manifest(&out_a)["config"].clone();
    let cfg2 = write_cfg(dir.path(), "echoed.json", &echoed);
    let out_b = dir.path().join("b");
    assert!(run(&out_b, &[], "train", &cfg2).status.success());

    assert_eq!(
        std::fs::read(out_a.join("metrics.csv")).unwrap(),
        std::fs::read(out_b.join("metrics.csv")).unwrap()
    );
}
