mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture;

fn comorbid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_comorbid"))
        .args(args)
        .env_remove("COMORBID_CONFIG")
        .env_remove("COMORBID_PORT")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(comorbid(&["--help"]).status.code(), Some(0));
    assert_eq!(comorbid(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_error_exits_one() {
    assert_eq!(comorbid(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(comorbid(&[]).status.code(), Some(1));
}

#[test]
fn missing_input_exits_two() {
    let out = comorbid(&[
        "gold",
        "--annotations",
        "/nonexistent/annotations.jsonl",
        "--out",
        "/tmp/x.jsonl",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/annotations.jsonl"));
}

#[test]
fn kappa_matches_expected_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("kappa.json");
    let out = comorbid(&[
        "--lexicon",
        p(&fixture("kappa/lexicon.tsv")),
        "--mapping",
        p(&fixture("kappa/mapping.csv")),
        "kappa",
        "--annotations",
        p(&fixture("kappa/annotations.jsonl")),
        "--out",
        p(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let got: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let want: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("kappa/expected.json")).unwrap()).unwrap();
    assert_eq!(got, want);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("0.400"), "{table}");
}

#[test]
fn eval_rejects_k_below_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = p(dir.path());
    assert_eq!(
        comorbid(&["synth", "--out-dir", d, "--documents", "10"]).status.code(),
        Some(0)
    );
    let config = format!("{d}/config.toml");
    for step in ["extract", "gold"] {
        assert_eq!(comorbid(&["--config", &config, step]).status.code(), Some(0));
    }
    assert_eq!(
        comorbid(&["--config", &config, "eval", "--k", "1"]).status.code(),
        Some(1)
    );
}

#[test]
fn extraction_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = p(dir.path());
    assert_eq!(
        comorbid(&["synth", "--out-dir", d, "--documents", "40"]).status.code(),
        Some(0)
    );
    let config = format!("{d}/config.toml");
    let mut dumps = Vec::new();
    for threads in ["1", "4"] {
        let path = format!("{d}/mentions-{threads}.jsonl");
        let out = comorbid(&["--config", &config, "extract", "--threads", threads, "--out", &path]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        dumps.push(std::fs::read(path).unwrap());
    }
    assert!(!dumps[0].is_empty());
    assert_eq!(dumps[0], dumps[1]);
}

#[test]
fn cohort_filter_drops_documents_outside_window() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("lexicon.tsv"),
        std::fs::read(fixture("kappa/lexicon.tsv")).unwrap(),
    )
    .unwrap();
    std::fs::write(
        d.join("mapping.csv"),
        std::fs::read(fixture("kappa/mapping.csv")).unwrap(),
    )
    .unwrap();
    let docs = [
        ("in1", "p1", "2020-01-15", "Asthma noted."),
        ("early", "p1", "2019-09-01", "Asthma noted."),
        ("late", "p1", "2021-06-01", "Asthma noted."),
        ("edge", "p1", "2019-10-01", "Cholera noted."),
        ("nodate", "p9", "2020-01-15", "Cholera noted."),
    ];
    let corpus: String = docs
        .iter()
        .map(|(id, pid, date, text)| {
            serde_json::json!({ "doc_id": id, "patient_id": pid, "date": date, "text": text }).to_string() + "\n"
        })
        .collect();
    std::fs::write(d.join("corpus.jsonl"), corpus).unwrap();
    std::fs::write(d.join("index.csv"), "patient_id,index_date\np1,2020-01-01\n").unwrap();
    let out = comorbid(&[
        "--lexicon",
        p(&d.join("lexicon.tsv")),
        "--mapping",
        p(&d.join("mapping.csv")),
        "extract",
        "--corpus",
        p(&d.join("corpus.jsonl")),
        "--index-dates",
        p(&d.join("index.csv")),
        "--study-end",
        "2020-12-31",
        "--out",
        p(&d.join("mentions.jsonl")),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dump = std::fs::read_to_string(d.join("mentions.jsonl")).unwrap();
    let ids: Vec<String> = dump
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["doc_id"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    assert_eq!(ids, vec!["edge", "in1"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("3 excluded"));
}
