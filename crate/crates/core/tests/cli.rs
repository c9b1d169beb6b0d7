use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_numpred");
const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(FIXTURES).join(name)
}

/// A small DExp checkpoint and its corpus, trained once per test binary.
struct Trained {
    _dir: TempDir,
    data: PathBuf,
    model: PathBuf,
}

fn trained() -> &'static Trained {
    static CELL: OnceLock<Trained> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("corpus.jsonl");
        let model = dir.path().join("model");
        ok(&["synth", "--preset", "two-template", "--n", "300", "--seed", "1", "--out", s(&data)]);
        ok(&[
            "train", "--data", s(&data), "--out", s(&model), "--head", "dexp", "--epochs", "1",
            "--seed", "4", "--quiet",
        ]);
        Trained {
            _dir: dir,
            data,
            model,
        }
    })
}

#[test]
fn preprocess_reproduces_pinned_sentences() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.jsonl");
    ok(&["preprocess", "--input", s(&fixture("stats_raw.txt")), "--out", s(&out)]);
    let got = std::fs::read_to_string(out).unwrap();
    let want = std::fs::read_to_string(fixture("stats_fixture.jsonl")).unwrap();
    assert_eq!(got, want);
}

#[test]
fn stats_matches_golden_report() {
    let got: Value = serde_json::from_str(&ok(&[
        "stats",
        "--input",
        s(&fixture("stats_fixture.jsonl")),
        "--json",
    ]))
    .unwrap();
    let want: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("stats_golden.json")).unwrap())
            .unwrap();
    assert_eq!(got, want);
}

#[test]
fn stats_table_lists_every_row() {
    let table = ok(&["stats", "--input", s(&fixture("stats_fixture.jsonl"))]);
    for key in ["instances", "tokens", "numbers", "mean tokens", "%numbers", "p50", "p90", "max"] {
        assert!(table.contains(key), "{key} missing from\n{table}");
    }
    assert!(table.lines().any(|l| l.starts_with("instances") && l.trim_end().ends_with("20")));
}

#[test]
fn all_masked_on_single_number_corpus_is_an_empty_set_error() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("single.jsonl");
    let lines: Vec<String> = std::fs::read_to_string(fixture("stats_fixture.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| serde_json::from_str::<Value>(l).unwrap()["numbers"].as_array().unwrap().len() == 1)
        .map(str::to_owned)
        .collect();
    assert!(!lines.is_empty());
    std::fs::write(&single, lines.join("\n") + "\n").unwrap();
    let out = run(&[
        "eval", "--model", s(&t.model), "--data", s(&single), "--mode", "all-masked",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("empty"), "{err}");
}

#[test]
fn predict_prints_seventeen_normalized_decades() {
    let t = trained();
    let out = ok(&[
        "predict", "--model", s(&t.model), "--text",
        "revenue rose to $32 million in 2016 as planned .", "--slot", "0", "--json",
    ]);
    let v: Value = serde_json::from_str(&out).unwrap();
    let decades: Vec<f64> =
        v["decades"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(decades.len(), 17);
    let total: f64 = decades.iter().sum();
    assert!((total - 1.0).abs() < 1e-9, "sum {total}");
    assert!(decades.iter().all(|&p| p >= 0.0));

    let table = ok(&[
        "predict", "--model", s(&t.model), "--text",
        "revenue rose to $32 million in 2016 as planned .", "--slot", "0",
    ]);
    assert!(table.lines().count() >= 17);
}

#[test]
fn equal_seeds_give_byte_identical_reports() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for i in 0..2 {
        let eval = dir.path().join(format!("eval{i}.json"));
        let anomaly = dir.path().join(format!("anomaly{i}.json"));
        let synth = dir.path().join(format!("synth{i}.jsonl"));
        ok(&["eval", "--model", s(&t.model), "--data", s(&t.data), "--seed", "9", "--out", s(&eval)]);
        ok(&[
            "anomaly", "--model", s(&t.model), "--data", s(&t.data), "--seed", "9", "--out",
            s(&anomaly),
        ]);
        ok(&["synth", "--preset", "linked", "--n", "50", "--seed", "9", "--out", s(&synth)]);
        reports.push([eval, anomaly, synth].map(|p| std::fs::read(p).unwrap()));
    }
    assert_eq!(reports[0], reports[1]);

    let train_out = |name: &str| {
        let model = dir.path().join(name);
        ok(&[
            "train", "--data", s(&t.data), "--out", s(&model), "--epochs", "1", "--seed", "2",
            "--quiet",
        ]);
        std::fs::read(model.join("params.bin")).unwrap()
    };
    assert_eq!(train_out("a"), train_out("b"));
}

#[test]
fn different_seeds_change_anomaly_draws() {
    let t = trained();
    let a = ok(&["anomaly", "--model", s(&t.model), "--data", s(&t.data), "--seed", "1"]);
    let b = ok(&["anomaly", "--model", s(&t.model), "--data", s(&t.data), "--seed", "2"]);
    assert_ne!(a, b);
}

#[test]
fn baseline_eval_needs_no_model() {
    let t = trained();
    let out = ok(&[
        "eval", "--baseline", "median", "--train", s(&t.data), "--data", s(&t.data),
    ]);
    assert!(!out.is_empty());
}

#[test]
fn malformed_jsonl_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    let good = std::fs::read_to_string(fixture("stats_fixture.jsonl")).unwrap();
    let first = good.lines().next().unwrap();
    std::fs::write(&bad, format!("{first}\n{{\"tokens\": [\n")).unwrap();
    let out = run(&["stats", "--input", s(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn exit_codes_for_usage_and_missing_files() {
    assert_eq!(run(&["stats"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--data", "x.jsonl"]).status.code(), Some(2));
    let out = run(&["stats", "--input", "/nonexistent/corpus.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["synth", "--preset", "no-such-preset"]).status.code(), Some(2));
}
