use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn lemurkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lemurkit"))
        .args(args)
        .env_remove("LEMURKIT_PROVIDER")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let out = lemurkit(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage:"));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_1() {
    let corpus = fixture("corpus.jsonl");
    for args in [
        vec!["split", "--bogus"],
        vec!["frobnicate"],
        vec!["split", "--in", p(&corpus), "--ratios", "0.5,0.5"],
        vec!["pairs", "--in", p(&corpus), "--manifest", "m.json"],
        vec!["eval", "--index", "i.jsonl", "--setting", "sideways", "--queries", "q.jsonl"],
        vec!["search", "--index", "i.jsonl", "--query", "x", "--provider", "http://nope"],
    ] {
        let out = lemurkit(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn semantic_usage_errors_exit_1() {
    let out = lemurkit(&[
        "eval",
        "--index",
        p(&fixture("eval/index.jsonl")),
        "--queries",
        p(&fixture("eval/queries.jsonl")),
        "--setting",
        "test_only",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--manifest"));

    let out = lemurkit(&[
        "eval",
        "--index",
        p(&fixture("eval/index.jsonl")),
        "--queries",
        p(&fixture("eval/queries.jsonl")),
        "--k",
        "3,1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = lemurkit(&["split", "--in", "/definitely/not/here.jsonl"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));

    let garbage = dir.path().join("index.jsonl");
    fs::write(&garbage, "not an index\n").unwrap();
    let out = lemurkit(&["search", "--index", p(&garbage), "--query", "x"]);
    assert_eq!(out.status.code(), Some(2));

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "{broken\n").unwrap();
    let out = lemurkit(&["split", "--in", p(&empty)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_subcommand_help_documents_formats() {
    for cmd in ["lcs-score", "split", "pairs", "index", "search", "eval", "compare", "loss-check"] {
        let out = lemurkit(&[cmd, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("Usage:") && text.contains('{'), "{cmd} help lacks a format description");
    }
}

#[test]
fn split_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out_path = dir.path().join(name);
        let out = lemurkit(&[
            "split",
            "--in",
            p(&fixture("corpus.jsonl")),
            "--ratios",
            "0.6,0.2,0.2",
            "--seed",
            "7",
            "--out",
            p(&out_path),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(out_path).unwrap()
    };
    let first = run("a.json");
    assert_eq!(first, run("b.json"));
    // rerunning into the same path replaces the file
    assert_eq!(first, run("a.json"));

    let manifest: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["assignment"].as_object().unwrap().len(), 8);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("lemurkit.toml");
    fs::write(&config, "seed = 7\nratios = [0.6, 0.2, 0.2]\n").unwrap();
    let corpus = fixture("corpus.jsonl");
    let from_flags = lemurkit(&["split", "--in", p(&corpus), "--ratios", "0.6,0.2,0.2", "--seed", "7"]);
    let from_config = lemurkit(&["--config", p(&config), "split", "--in", p(&corpus)]);
    assert_eq!(from_flags.stdout, from_config.stdout);
    let overridden = lemurkit(&["--config", p(&config), "split", "--in", p(&corpus), "--seed", "9"]);
    assert_eq!(stdout_json(&overridden)["seed"], 9);

    fs::write(&config, "sead = 7\n").unwrap();
    let out = lemurkit(&["--config", p(&config), "split", "--in", p(&corpus)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn eval_test_only_matches_golden_report() {
    let out = lemurkit(&[
        "eval",
        "--index",
        p(&fixture("eval/index.jsonl")),
        "--queries",
        p(&fixture("eval/queries.jsonl")),
        "--manifest",
        p(&fixture("eval/manifest.json")),
        "--setting",
        "test_only",
        "--depth",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let golden = fs::read(fixture("eval/expected_test_only.json")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), String::from_utf8(golden).unwrap());
    assert!(String::from_utf8_lossy(&out.stderr).contains("q4"));
}

#[test]
fn eval_full_ranks_by_hand() {
    // Query (1, 0) against x components: a 1, d = t 0.96, e 0.8, f 0.6, g 0.28,
    // h 0, c -0.6. The d/t tie goes to the smaller id.
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("full.json");
    let md = dir.path().join("full.md");
    let out = lemurkit(&[
        "eval",
        "--index",
        p(&fixture("eval/index.jsonl")),
        "--queries",
        p(&fixture("eval/queries.jsonl")),
        "--out",
        p(&report),
        "--markdown",
        p(&md),
        "--label",
        "base",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let got: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(
        got,
        json!({"setting": "full", "num_queries": 4, "excluded": 0,
               "acc": {"1": 0.25, "3": 0.5, "5": 0.75}, "ranks": [1, 5, 8, 3], "not_found": 0})
    );
    assert!(fs::read_to_string(md).unwrap().contains("| base | full | 4 | 25.00 | 50.00 | 75.00 |"));
}

#[test]
fn compare_reports() {
    let dir = TempDir::new().unwrap();
    let base = dir.path().join("base.json");
    let tuned = dir.path().join("tuned.json");
    let report = |acc: [f64; 2]| {
        json!({"setting": "full", "num_queries": 10, "excluded": 0,
               "acc": {"1": acc[0], "5": acc[1]}, "ranks": [], "not_found": 0})
        .to_string()
    };
    fs::write(&base, report([0.8, 0.0])).unwrap();
    fs::write(&tuned, report([0.9, 0.5])).unwrap();
    let out = lemurkit(&["compare", "--base", p(&base), "--tuned", p(&tuned)]);
    assert_eq!(out.status.code(), Some(0));
    let cmp = stdout_json(&out);
    let d1 = &cmp["deltas"][0];
    assert_eq!(d1["k"], 1);
    assert!((d1["delta"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert!((d1["relative_gain"].as_f64().unwrap() - 0.125).abs() < 1e-12);
    assert_eq!(cmp["deltas"][1]["relative_gain"], Value::Null);

    fs::write(&tuned, report([0.9, 0.5]).replace("\"full\"", "\"test_only\"")).unwrap();
    let out = lemurkit(&["compare", "--base", p(&base), "--tuned", p(&tuned)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lcs_score_by_hand() {
    let dir = TempDir::new().unwrap();
    let scores = dir.path().join("scores.jsonl");
    let out = lemurkit(&["lcs-score", "--in", p(&fixture("lcs/manifest.jsonl")), "--out", p(&scores)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<Value> = fs::read_to_string(&scores)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    // {the:1, cat:1, sat:1} against {the:2, cat:1, sat:1, on:1, mat:1}: 4 / sqrt(3 * 8)
    let want = 4.0 / 24f64.sqrt();
    assert_eq!(lines[0]["celex_id"], "31999R0001");
    assert_eq!(lines[0]["language"], "en");
    assert_eq!(lines[0]["year"], 1999);
    assert!((lines[0]["score"].as_f64().unwrap() - want).abs() < 1e-12);
    assert_eq!(lines[0]["shared_vocab"], 3);
    assert_eq!(lines[1]["language"], "fr");
    assert_eq!(lines[1]["score"], 0.0);
    assert_eq!(lines[2]["year"], 1850);

    let agg = stdout_json(&out);
    assert!((agg["en"]["1995"]["mean"].as_f64().unwrap() - want).abs() < 1e-12);
    assert_eq!(agg["en"]["1995"]["count"], 1);
    assert_eq!(agg["fr"]["1995"]["count"], 1);
    assert!(agg["en"].get("1850").is_none());
}

#[test]
fn loss_check_summary() {
    let out = lemurkit(&["loss-check", "--cases", "12", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = stdout_json(&out);
    assert_eq!(s["cases"], 12);
    assert_eq!(s["failures"], 0);
    assert!(s["max_rel_error"].as_f64().unwrap() < 1e-4);
    let again = lemurkit(&["loss-check", "--cases", "12", "--seed", "5"]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn mock_pipeline_end_to_end() {
    let dir = TempDir::new().unwrap();
    let f = |name: &str| dir.path().join(name);
    let corpus = fixture("corpus.jsonl");
    let run = |args: &[&str]| {
        let out = lemurkit(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out
    };
    run(&["split", "--in", p(&corpus), "--ratios", "0.5,0.25,0.25", "--out", p(&f("m.json")), "--records", p(&f("r.jsonl"))]);
    assert_eq!(fs::read_to_string(f("r.jsonl")).unwrap().lines().count(), 16);
    run(&["pairs", "--in", p(&corpus), "--manifest", p(&f("m.json")), "--langs", "en,fr", "--out", p(&f("g.jsonl"))]);
    run(&["pairs", "--in", p(&corpus), "--manifest", p(&f("m.json")), "--lang", "fr", "--split", "test", "--out", p(&f("p.jsonl"))]);
    let groups = fs::read_to_string(f("g.jsonl")).unwrap();
    assert_eq!(groups.lines().count(), 16);

    let index = run(&["index", "--in", p(&f("g.jsonl")), "--out", p(&f("idx.jsonl")), "--provider", "mock:32:1"]);
    assert!(String::from_utf8_lossy(&index.stderr).contains("truncated 0/16"));
    let header: Value = serde_json::from_str(fs::read_to_string(f("idx.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(header["count"], 16);
    assert_eq!(header["dim"], 32);

    for setting in ["full", "test_only"] {
        let out = run(&[
            "eval", "--index", p(&f("idx.jsonl")), "--in", p(&f("p.jsonl")), "--manifest", p(&f("m.json")),
            "--setting", setting, "--provider", "mock:32:1",
        ]);
        let report = stdout_json(&out);
        assert_eq!(report["setting"], setting);
        assert_eq!(report["num_queries"], 2);
        assert_eq!(report["excluded"], 0);
    }
    let out = run(&["search", "--index", p(&f("idx.jsonl")), "--query", "air quality", "--top", "3", "--provider", "mock:32:1"]);
    let hits: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(hits["hits"].as_array().unwrap().len(), 3);
}
