mod common;

use clap::Parser;
use common::*;
use emocov::cli::{resolve_config, Cli};
use emocov::extractor::{Extractor, Lexicon};
use emocov::wire::mock::MockBackend;
use emocov::wire::standin::StandinServer;
use std::path::Path;
use std::process::{Command, Output};

fn emocov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emocov")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn fixture() -> String {
    data("fixture_400.txt").display().to_string()
}

fn error_record(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let last = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(last).unwrap_or_else(|e| panic!("stderr is not a JSON record ({e}): {stderr}"))
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn coverage_reports_exact_counts() {
    let out = emocov(&["coverage", &fixture(), "--k", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let extractor = Extractor::with_lexicon(Lexicon::builtin());
    let suite = emocov::corpus::load_corpus(&data("fixture_400.txt"), emocov::corpus::CorpusFormat::SemicolonTextLabel).unwrap().suite;
    let raw: Vec<[usize; 4]> = suite
        .sentences()
        .iter()
        .map(|s| extractor.extract(&s.text).unwrap().indices().map(|i| i as usize))
        .collect();
    let covered = oracle_cells(&raw, 2, 6).len() as u64;
    assert_eq!(report["total"], 216);
    assert_eq!(report["covered"], covered);
    assert_eq!(report["per_projection"].as_object().unwrap().len(), 6);
}

#[test]
fn coverage_can_write_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("cov.json");
    let out = emocov(&["coverage", &fixture(), "--k", "4", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(report["total"], 1296);
}

#[test]
fn usage_errors_exit_2_with_a_json_record() {
    let fx = fixture();
    let fx = fx.as_str();
    for args in [
        vec!["coverage", fx, "--k", "5"],
        vec!["coverage"],
        vec!["frobnicate"],
        vec!["gaps", fx, "--budget", "many"],
        vec!["run", "--mock"],
        vec!["eval", fx, "--config", "/nonexistent/run.toml"],
        vec!["coverage", fx, "--max-inflight", "0"],
    ] {
        let out = emocov(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_record(&out)["error"], "usage", "{args:?}");
    }
    assert_eq!(emocov(&[]).status.code(), Some(2));
    assert_eq!(emocov(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "fine line;joy\nno separator\n").unwrap();
    for args in [vec!["coverage", bad.to_str().unwrap()], vec!["coverage", "/nonexistent/corpus.txt"]] {
        let out = emocov(&args);
        assert_eq!(out.status.code(), Some(4), "{args:?}");
        let rec = error_record(&out);
        assert_eq!(rec["error"], "data");
    }
    let out = emocov(&["coverage", bad.to_str().unwrap()]);
    assert!(error_record(&out)["message"].as_str().unwrap().contains("line 2"));
}

#[test]
fn gaps_are_listed_in_priority_order() {
    let out = emocov(&["gaps", &fixture(), "--k", "2", "--budget", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<serde_json::Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    for (i, g) in lines.iter().enumerate() {
        assert_eq!(g["priority"], i);
        assert!(g["prompt"].as_str().unwrap().starts_with("Generate a sentence with"));
    }
    let scores: Vec<u64> = lines.iter().map(|g| g["score"].as_u64().unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "chunk_size = 50\nmax_inflight = 3\n[coverage]\nk = 3\n[augmentor]\nmax_new_sentences = 9\n");
    let parse = |args: &[&str]| resolve_config(&Cli::try_parse_from(args).unwrap()).unwrap();

    let from_config = parse(&["emocov", "run", "--config", &cfg]);
    assert_eq!((from_config.coverage.k(), from_config.chunk_size, from_config.max_inflight), (3, 50, 3));
    assert_eq!(from_config.augmentor.max_new_sentences, 9);
    assert!(!from_config.mock_mode);

    let flagged = parse(&["emocov", "run", "--config", &cfg, "--k", "1", "--chunk-size", "7", "--budget", "2", "--max-inflight", "8", "--mock"]);
    assert_eq!((flagged.coverage.k(), flagged.chunk_size, flagged.max_inflight), (1, 7, 8));
    assert_eq!(flagged.augmentor.max_new_sentences, 2);
    assert!(flagged.mock_mode);

    let defaults = parse(&["emocov", "run"]);
    assert_eq!((defaults.coverage.k(), defaults.chunk_size, defaults.augmentor.max_new_sentences), (2, 200, 50));
}

fn read_artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    ["report.json", "results.csv", "attempts.jsonl", "verdicts.jsonl", "predictions.jsonl"]
        .iter()
        .map(|f| (f.to_string(), std::fs::read(dir.join(f)).unwrap()))
        .collect()
}

#[test]
fn run_is_deterministic_across_concurrency_settings() {
    let config = data("mock_run.toml").display().to_string();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out_a = emocov(&["run", "--config", &config, "--chunk-size", "100", "--budget", "12", "--max-inflight", "1", "--out", a.path().to_str().unwrap()]);
    let out_b = emocov(&["run", "--config", &config, "--chunk-size", "100", "--budget", "12", "--max-inflight", "8", "--out", b.path().to_str().unwrap()]);
    assert_eq!(out_a.status.code(), Some(0), "{}", String::from_utf8_lossy(&out_a.stderr));
    assert_eq!(out_b.status.code(), Some(0));
    assert_eq!(read_artifacts(a.path()), read_artifacts(b.path()));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(a.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["chunk_size"], 100);
    assert_eq!(report["subsets"].as_array().unwrap().len(), 4);
    assert_eq!(report["subsets"][0]["generated_count"], 12);
}

#[test]
fn unreachable_endpoints_exit_3_after_writing_the_report() {
    let server = StandinServer::start(MockBackend::builtin(0)).unwrap();
    let url = server.url().to_string();
    drop(server);
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!("corpus = \"{}\"\n[augmentor]\nretry_limit = 0\nllm_endpoint = \"{url}\"\n[sut]\nname = \"m\"\nendpoint = \"{url}\"\n", fixture()),
    );
    let out_dir = dir.path().join("out");
    let out = emocov(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(error_record(&out)["error"], "endpoint");
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["skipped"].as_array().unwrap().len(), 2);

    let eval = emocov(&["eval", &fixture(), "--config", &cfg]);
    assert_eq!(eval.status.code(), Some(3));
}

#[test]
fn eval_and_label_in_mock_mode() {
    let out = emocov(&["eval", &fixture(), "--mock"]);
    assert_eq!(out.status.code(), Some(0));
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let m = MockBackend::builtin(0);
    let suite = emocov::corpus::load_corpus(&data("fixture_400.txt"), emocov::corpus::CorpusFormat::SemicolonTextLabel).unwrap().suite;
    let correct = suite.sentences().iter().filter(|s| Some(m.classify_one("distilbert-base-uncased-emotion", &s.text)) == s.gold_label).count();
    assert_eq!(rec["correct"], correct);
    assert_eq!(rec["total"], 400);

    let out = emocov(&["label", &fixture(), "--mock"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 400);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["sentence_id"], "fixture_400.txt:1");
    assert_eq!(first["per_model"].as_object().unwrap().len(), 6);
}

#[test]
fn real_mode_talks_http_to_the_standin() {
    let server = StandinServer::start(MockBackend::builtin(0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &format!(
            "corpus = \"{corpus}\"\nchunk_size = 200\n[augmentor]\nmax_new_sentences = 5\nllm_endpoint = \"{url}\"\n[sut]\nname = \"m\"\nendpoint = \"{url}\"\n",
            corpus = fixture(),
            url = server.url(),
        ),
    );
    let mock_dir = dir.path().join("mock");
    let http_dir = dir.path().join("http");
    let via_http = emocov(&["run", "--config", &cfg, "--out", http_dir.to_str().unwrap()]);
    assert_eq!(via_http.status.code(), Some(0), "{}", String::from_utf8_lossy(&via_http.stderr));
    assert!(server.requests_served() > 0);
    let in_process = emocov(&["run", "--config", &cfg, "--mock", "--out", mock_dir.to_str().unwrap()]);
    assert_eq!(in_process.status.code(), Some(0));
    assert_eq!(read_artifacts(&http_dir), read_artifacts(&mock_dir));
}
