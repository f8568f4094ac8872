use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn dirank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirank")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = dirank(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn synth(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join("data");
    let mut args = vec!["synth", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&args);
    out.join("dirank.toml")
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

fn csv_rows(p: impl AsRef<Path>) -> Vec<Vec<String>> {
    read(p).lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn rank_recovers_test_network_order() {
    let dir = TempDir::new().unwrap();
    let cfg = synth(dir.path(), &["--n", "2000", "--seed", "3"]);
    let out = dir.path().join("out");
    ok(&["rank", "-c", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--pagerank"]);
    let order: Vec<String> = csv_rows(out.join("ranking.csv")).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(order, ["X1", "X2", "X4", "X3"]);
    for f in ["graph.json", "graph.csv", "edges.csv", "pagerank.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let edges = csv_rows(out.join("edges.csv"));
    assert_eq!(edges.len(), 12);
    let x1_x2 = edges.iter().find(|r| r[0] == "X1" && r[1] == "X2").unwrap();
    assert_eq!(x1_x2[4], "2", "selected order for X2 given X1");
}

#[test]
fn independent_pair_scores_near_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = synth(dir.path(), &["--network", "iid", "--n", "2000", "--seed", "5"]);
    ok(&["rank", "-c", cfg.to_str().unwrap()]);
    for row in csv_rows(cfg.parent().unwrap().join("out/ranking.csv")) {
        let score: f64 = row[1].parse().unwrap();
        assert!(score.abs() < 0.05, "{row:?}");
    }
}

#[test]
fn graph_json_is_bit_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = synth(dir.path(), &["--n", "500", "--seed", "9"]);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["rank", "-c", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--seed", "4"]);
    ok(&["rank", "-c", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(read(a.join("graph.json")), read(b.join("graph.json")));
    assert_eq!(read(a.join("ranking.csv")), read(b.join("ranking.csv")));
}

#[test]
fn full_length_window_matches_rank_edge() {
    let dir = TempDir::new().unwrap();
    let cfg = synth(dir.path(), &["--network", "gaussian", "--n", "600", "--seed", "2"]);
    let c = cfg.to_str().unwrap();
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    ok(&["rank", "-c", c, "--out", o]);
    // 600 increments come from 601 prices.
    ok(&["window", "-c", c, "--out", o, "--src", "X1", "--dst", "X2", "--length", "601"]);
    let windows = csv_rows(out.join("window.csv"));
    assert_eq!(windows.len(), 1);
    let edge = csv_rows(out.join("edges.csv")).into_iter().find(|r| r[0] == "X1" && r[1] == "X2").unwrap();
    assert_eq!(windows[0][2], edge[2]);
    assert_eq!(windows[0][4], edge[4]);
}

#[test]
fn window_errors_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    let cfg = synth(dir.path(), &["--network", "iid", "--n", "200"]);
    let c = cfg.to_str().unwrap();
    let long = dirank(&["window", "-c", c, "--src", "X1", "--dst", "X2", "--length", "5000"]);
    assert!(!long.status.success());
    assert!(String::from_utf8_lossy(&long.stderr).contains("exceeds"));
    let unknown = dirank(&["window", "-c", c, "--src", "X1", "--dst", "nope", "--length", "100"]);
    assert!(!unknown.status.success());
}

#[test]
fn blocks_give_one_row_per_index_and_month() {
    let dir = TempDir::new().unwrap();
    // 1800 samples spaced 292 minutes apart span one calendar year.
    let cfg = synth(
        dir.path(),
        &["--network", "gaussian", "--n", "1799", "--seed", "1", "--start", "2015-01-01", "--step-minutes", "292"],
    );
    let out = dirank(&["blocks", "-c", cfg.to_str().unwrap(), "--min-samples", "100"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(cfg.parent().unwrap().join("out/blocks.csv"));
    for id in ["X1", "X2"] {
        let mine: Vec<_> = rows.iter().filter(|r| r[1] == id).collect();
        assert_eq!(mine.len(), 12, "{id}");
        assert!(mine.iter().all(|r| r[4] == "ok"));
    }
    let positive = rows.iter().filter(|r| r[1] == "X1" && r[2].parse::<f64>().unwrap() > 0.0).count();
    assert!(positive >= 10, "driver positive in {positive}/12 months");
}

#[test]
fn short_month_is_flagged_and_run_succeeds() {
    let dir = TempDir::new().unwrap();
    // Daily samples from Jan 1 for 110 days: April holds only 20.
    let cfg = synth(dir.path(), &["--network", "iid", "--n", "109", "--start", "2015-01-01"]);
    let out = dirank(&["blocks", "-c", cfg.to_str().unwrap(), "--min-samples", "25"]);
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("2015-04"), "{stderr}");
    let rows = csv_rows(cfg.parent().unwrap().join("out/blocks.csv"));
    assert_eq!(rows.len(), 8);
    let april: Vec<_> = rows.iter().filter(|r| r[0] == "2015-04").collect();
    assert_eq!(april.len(), 2);
    assert!(april.iter().all(|r| r[4] == "block_too_short" && r[2].is_empty()));
}

#[test]
fn orders_writes_losses_and_frequencies() {
    let dir = TempDir::new().unwrap();
    let cfg = synth(dir.path(), &["--n", "800", "--seed", "6"]);
    ok(&["orders", "-c", cfg.to_str().unwrap()]);
    let out = cfg.parent().unwrap().join("out");
    let rows = csv_rows(out.join("orders.csv"));
    assert_eq!(rows.len(), 12 * 5);
    let freq = csv_rows(out.join("order_frequency.csv"));
    let total: usize = freq.iter().map(|r| r[1].parse::<usize>().unwrap()).sum();
    assert_eq!(total, 12);
}

#[test]
fn regions_and_json_outputs() {
    let dir = TempDir::new().unwrap();
    let cfg = synth(dir.path(), &["--n", "500", "--seed", "8"]);
    let text = read(&cfg)
        .replacen("region = \"other\"", "region = \"asia\"", 1)
        .replacen("region = \"other\"", "region = \"europe\"", 1)
        .replacen("region = \"other\"", "region = \"us\"", 1);
    std::fs::write(&cfg, text).unwrap();
    let c = cfg.to_str().unwrap();
    ok(&["regions", "-c", c, "--format", "json"]);
    let out = cfg.parent().unwrap().join("out");
    let regions: serde_json::Value = serde_json::from_str(&read(out.join("regions.json"))).unwrap();
    let labels: Vec<&str> = regions["labels"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(labels, ["Asia", "Europe", "NorthAmerica", "Other"]);
    let ranking: serde_json::Value = serde_json::from_str(&read(out.join("region_ranking.json"))).unwrap();
    let sum: f64 = ranking["scores"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!(sum.abs() < 1e-12);
    ok(&["heatmap", "-c", c, "--format", "json", "--k", "3", "--clamp-negative", "--transform", "return"]);
    let heat: serde_json::Value = serde_json::from_str(&read(out.join("heatmap.json"))).unwrap();
    let min = heat["weights"].as_array().unwrap().iter().flat_map(|r| r.as_array().unwrap()).map(|v| v.as_f64().unwrap()).fold(f64::MAX, f64::min);
    assert!(min >= 0.0);
}

#[test]
fn config_and_data_errors_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, "series = []\n").unwrap();
    let out = dirank(&["rank", "-c", empty.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no series"));

    let missing = dir.path().join("missing.toml");
    std::fs::write(&missing, "[[series]]\nid = \"a\"\npath = \"a.csv\"\n\n[[series]]\nid = \"b\"\npath = \"b.csv\"\n").unwrap();
    let out = dirank(&["rank", "-c", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("a.csv"));

    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, "[[series]]\nid = \"a\"\npath = \"a.csv\"\n\n[estimator]\nkk = 3\n").unwrap();
    assert!(!dirank(&["rank", "-c", typo.to_str().unwrap()]).status.success());
}

#[test]
fn failing_pairs_are_listed() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("a.csv"), "date,close\n2020-01-01,1\n2020-01-02,2\n2020-01-03,3\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "date,close\n2021-01-01,1\n2021-01-02,2\n").unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[[series]]\nid = \"a\"\npath = \"a.csv\"\n\n[[series]]\nid = \"b\"\npath = \"b.csv\"\n").unwrap();
    let out = dirank(&["rank", "-c", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("a -> b") && stderr.contains("b -> a"), "{stderr}");
}
