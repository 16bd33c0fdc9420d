mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn csr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csr")).args(args).output().unwrap()
}

fn index_shop(out: &Path) -> Output {
    csr(&[
        "index",
        "--schema",
        common::fixture("shop/catalog.json").to_str().unwrap(),
        "--trace",
        common::fixture("shop/trace.jsonl").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn error_line(out: &Output) -> Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
    serde_json::from_str(stderr.trim()).unwrap()
}

#[test]
fn index_writes_three_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = index_shop(&dir.path().join("idx"));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value = serde_json::from_slice(&fs::read(dir.path().join("idx/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["format_version"], 1);
}

#[test]
fn reindexing_unchanged_inputs_keeps_hashes() {
    let dir = tempfile::tempdir().unwrap();
    index_shop(&dir.path().join("a"));
    index_shop(&dir.path().join("b"));
    let read = |d: &str| fs::read_to_string(dir.path().join(d).join("manifest.json")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn missing_schema_exits_2_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = csr(&[
        "index",
        "--schema",
        missing.to_str().unwrap(),
        "--trace",
        common::fixture("shop/trace.jsonl").to_str().unwrap(),
        "--out",
        dir.path().join("idx").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_line(&out);
    assert_eq!(err["error"], "missing_input");
    assert_eq!(err["path"], missing.to_str().unwrap());
}

#[test]
fn query_prints_json_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("idx");
    index_shop(&idx);
    let idx = idx.to_str().unwrap();

    let out = csr(&["query", "--index", idx, "revenue per product category"]);
    assert_eq!(out.status.code(), Some(0));
    let resp: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!resp["entities"].as_array().unwrap().is_empty());
    assert!(resp["schema_version"].is_string());
    assert!(resp["stage_timings_ms"]["total"].is_number());

    let out = csr(&["query", "--index", idx, "--tables-only", "revenue per product category"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.trim_start().starts_with('{'));
    let tables: Vec<&str> = text.lines().collect();
    assert!(tables.contains(&"categories"), "{tables:?}");
}

#[test]
fn repeated_query_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("idx");
    index_shop(&idx);
    let run = || csr(&["query", "--index", idx.to_str().unwrap(), "--no-timings", "open orders by customer"]).stdout;
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
}

#[test]
fn empty_question_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("idx");
    index_shop(&idx);
    let out = csr(&["query", "--index", idx.to_str().unwrap(), "   "]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "empty_question");
}

#[test]
fn scope_collapse_exits_3_with_step() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("catalog.json"),
        r#"{"tables": [{"name": "alpha", "columns": [{"name": "x"}]}, {"name": "beta", "columns": [{"name": "zebra"}]}]}"#,
    )
    .unwrap();
    fs::write(p.join("trace.jsonl"), "{\"question\": \"zebra report\", \"sql\": \"SELECT x FROM alpha\"}\n").unwrap();
    fs::write(
        p.join("config.json"),
        r#"{"schedule": {"steps": [{"k": 1, "l": 1, "h": 2}], "scope_combine": "intersection"}}"#,
    )
    .unwrap();
    let s = |n: &str| p.join(n).to_str().unwrap().to_string();
    let out = csr(&["index", "--schema", &s("catalog.json"), "--trace", &s("trace.jsonl"), "--out", &s("idx"), "--config", &s("config.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = csr(&["query", "--index", &s("idx"), "zebra"]);
    assert_eq!(out.status.code(), Some(3));
    let err = error_line(&out);
    assert_eq!(err["error"], "scope_collapsed");
    assert_eq!(err["step"], 1);
}

#[test]
fn version_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let idx = dir.path().join("idx");
    index_shop(&idx);
    let m = idx.join("manifest.json");
    fs::write(&m, fs::read_to_string(&m).unwrap().replace("\"format_version\": 1", "\"format_version\": 2")).unwrap();
    let out = csr(&["query", "--index", idx.to_str().unwrap(), "open orders"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_line(&out);
    assert_eq!(err["error"], "version_mismatch");
    assert!(err["message"].as_str().unwrap().contains("expected 1, found 2"));
}

#[test]
fn bad_arguments_exit_2_on_one_line() {
    let out = csr(&["query"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");
}

#[test]
fn eval_and_bench_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("profile.json"),
        r#"{"table_count": 20, "columns_per_table_mean": 12.0, "query_count": 40, "fk_median_target": 4}"#,
    )
    .unwrap();
    fs::write(p.join("schedules.json"), r#"[{"steps": [{"k": 8, "l": 40, "h": 8}, {"k": 4, "l": 20, "h": 6}]}]"#).unwrap();
    let s = |n: &str| p.join(n).to_str().unwrap().to_string();

    let out = csr(&["eval", "--profile", &s("profile.json"), "--schedules", &s("schedules.json"), "--seed", "3", "--out", &s("sweep.csv")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(p.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("group,schedule_id,iteration,k,l,h,precision,recall"));
    assert_eq!(lines.count(), 2);

    let out = csr(&["bench", "--profile", &s("profile.json"), "--repetitions", "30", "--out", &s("bench.json")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(p.join("bench.json")).unwrap()).unwrap();
    assert_eq!(report["sample_count"], 30);
    assert!(report["per_stage_means"]["relational"].is_number());

    let out = csr(&["bench", "--profile", &s("profile.json"), "--repetitions", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_then_index_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let s = |n: &str| p.join(n).to_str().unwrap().to_string();
    let out = csr(&["generate", "--group", "1", "--seed", "5", "--out", &s("g1")]);
    assert_eq!(out.status.code(), Some(0));
    let out = csr(&["index", "--schema", &s("g1/catalog.json"), "--trace", &s("g1/trace.jsonl"), "--out", &s("idx")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stats: Value = serde_json::from_slice(&fs::read(p.join("idx/manifest.json")).unwrap()).unwrap();
    assert_eq!(stats["config"]["schedule"]["steps"].as_array().unwrap().len(), 3);
}
