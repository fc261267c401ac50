mod common;

use common::*;
use emocov::arbiter::Ensemble;
use emocov::augmentor::AugmentorConfig;
use emocov::corpus::{load_corpus, CorpusFormat};
use emocov::extractor::{Extractor, Lexicon};
use emocov::harness::{run_experiment, ExperimentRun, Phase, Pipeline, SutProfile};
use emocov::rational::{self, Rational};
use emocov::wire::mock::{FaultRegion, MockBackend, MockModel};
use emocov::wire::{Classifier, WireError};
use emocov::{CorpusLabel, Origin, TestSuite};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

const SUT: &str = "sut";

fn corpus(n: usize) -> TestSuite {
    let all = load_corpus(&data("fixture_400.txt"), CorpusFormat::SemicolonTextLabel).unwrap().suite;
    TestSuite::new("fx", all.sentences()[..n].to_vec()).unwrap()
}

fn mock() -> MockBackend {
    MockBackend::builtin(7)
        .with_model(SUT, MockModel::Faulty(FaultRegion::MixedEmotion))
        .with_model("xtremedistil-emotion", MockModel::Hash)
        .with_model("bertweet-emotion-base", MockModel::Hash)
}

fn run_with(suite: &TestSuite, k: usize, chunk: usize, budget: usize, classifier: &dyn Classifier) -> ExperimentRun {
    let generator = mock();
    let extractor = Extractor::with_lexicon(Lexicon::builtin());
    let ensemble = Ensemble::reference("mock");
    let sut = SutProfile { name: SUT.into(), endpoint: "mock".into() };
    let augmentor = AugmentorConfig { max_new_sentences: budget, ..AugmentorConfig::default() };
    let pipeline = Pipeline {
        extractor: &extractor,
        generator: &generator,
        classifier,
        ensemble: &ensemble,
        sut: &sut,
        augmentor: &augmentor,
        max_inflight: 4,
    };
    run_experiment(suite, k, chunk, &pipeline).unwrap()
}

fn run(suite: &TestSuite, k: usize, chunk: usize, budget: usize) -> ExperimentRun {
    run_with(suite, k, chunk, budget, &mock())
}

#[test]
fn subset_figures_match_independent_recount() {
    let suite = corpus(400);
    let out = run(&suite, 2, 150, 20);
    let sizes: Vec<_> = out.report.subsets.iter().map(|s| s.size_before).collect();
    assert_eq!(sizes, vec![150, 150, 100]);
    let extractor = Extractor::with_lexicon(Lexicon::builtin());
    let m = mock();
    for (s, part) in out.report.subsets.iter().zip(suite.sentences().chunks(150)) {
        let raw: Vec<[usize; 4]> = part
            .iter()
            .map(|x| extractor.extract(&x.text).unwrap().indices().map(|i| i as usize))
            .collect();
        assert_eq!(s.cov_before, rational::ratio(oracle_cells(&raw, 2, 6).len() as i64, 216));
        let correct = part.iter().filter(|x| Some(m.classify_one(SUT, &x.text)) == x.gold_label).count();
        assert_eq!(s.acc_before, rational::ratio(correct as i64, part.len() as i64));
        assert_eq!(s.size_after, s.size_before + s.generated_count);
        assert_eq!(s.generated_count, 20);
    }
    let n = Rational::from_integer(3.into());
    let cov: Rational = out.report.subsets.iter().map(|s| s.cov_delta()).sum::<Rational>() / &n;
    let acc: Rational = out.report.subsets.iter().map(|s| s.acc_delta()).sum::<Rational>() / &n;
    assert_eq!(out.report.mean_cov_delta, cov);
    assert_eq!(out.report.mean_acc_delta, acc);
}

#[test]
fn generated_gold_labels_come_from_the_weighted_vote() {
    let out = run(&corpus(200), 2, 200, 15);
    assert_eq!(out.verdicts.len(), 15);
    let gold: BTreeMap<&str, CorpusLabel> = out
        .predictions
        .iter()
        .filter(|p| p.phase == Phase::After && p.origin == Origin::Generated)
        .map(|p| (p.sentence_id.as_str(), p.gold))
        .collect();
    assert_eq!(gold.len(), 15);
    for v in &out.verdicts {
        assert_eq!(gold[v.verdict.sentence_id.as_str()], v.verdict.label);
        assert_eq!(v.verdict.per_model.len(), 6);
    }
    let after = &out.report.subsets[0];
    let correct = out.predictions.iter().filter(|p| p.phase == Phase::After && p.correct).count();
    assert_eq!(after.acc_after, rational::ratio(correct as i64, after.size_after as i64));
}

#[test]
fn zero_budget_leaves_both_metrics_unchanged() {
    let out = run(&corpus(200), 2, 100, 0);
    for s in &out.report.subsets {
        assert_eq!(s.cov_before, s.cov_after);
        assert_eq!(s.acc_before, s.acc_after);
        assert_eq!(s.size_before, s.size_after);
    }
    assert!(out.attempts.is_empty() && out.verdicts.is_empty());
    assert_eq!(out.report.mean_cov_delta, rational::from_int(0));
}

#[test]
fn higher_k_starts_lower_and_both_move_in_the_expected_direction() {
    let suite = corpus(400);
    let k2 = run(&suite, 2, 200, 50);
    let k3 = run(&suite, 3, 200, 50);
    for (a, b) in k2.report.subsets.iter().zip(&k3.report.subsets) {
        assert!(b.cov_before < a.cov_before);
    }
    for r in [&k2.report, &k3.report] {
        assert!(r.mean_cov_delta > rational::from_int(0));
        assert!(r.mean_acc_delta < rational::from_int(0));
    }
}

#[test]
fn original_predictions_are_identical_before_and_after() {
    let out = run(&corpus(400), 2, 200, 30);
    let before: Vec<_> = out.predictions.iter().filter(|p| p.phase == Phase::Before).collect();
    let after: Vec<_> = out.predictions.iter().filter(|p| p.phase == Phase::After && p.origin == Origin::Corpus).collect();
    assert_eq!(before.len(), 400);
    assert_eq!(before.len(), after.len());
    for (b, a) in before.iter().zip(&after) {
        assert_eq!((&b.sentence_id, b.gold, b.predicted), (&a.sentence_id, a.gold, a.predicted));
    }
}

#[test]
fn repeated_runs_are_identical() {
    let suite = corpus(200);
    assert_eq!(run(&suite, 2, 100, 25), run(&suite, 2, 100, 25));
}

struct SutDown;

impl Classifier for SutDown {
    fn classify(&self, endpoint: &str, _: &str, _: &[String]) -> Result<Vec<CorpusLabel>, WireError> {
        Err(WireError::Unavailable { endpoint: endpoint.into(), reason: "down".into() })
    }
    fn probe(&self, endpoint: &str) -> Result<(), WireError> {
        Err(WireError::Unavailable { endpoint: endpoint.into(), reason: "down".into() })
    }
}

/// Answers normally until the ensemble has been asked `budget` times.
struct EnsembleDiesLater {
    inner: MockBackend,
    ensemble_calls: AtomicUsize,
    budget: usize,
}

impl Classifier for EnsembleDiesLater {
    fn classify(&self, endpoint: &str, model: &str, texts: &[String]) -> Result<Vec<CorpusLabel>, WireError> {
        if model != SUT && self.ensemble_calls.fetch_add(1, Ordering::SeqCst) >= self.budget {
            return Err(WireError::Unavailable { endpoint: endpoint.into(), reason: "gone".into() });
        }
        self.inner.classify(endpoint, model, texts)
    }
}

#[test]
fn unreachable_sut_skips_every_subset() {
    let out = run_with(&corpus(400), 2, 200, 10, &SutDown);
    assert!(out.report.subsets.is_empty());
    assert_eq!(out.report.skipped.iter().map(|s| s.subset_index).collect::<Vec<_>>(), vec![0, 1]);
    assert!(out.report.skipped[0].reason.contains("unavailable"));
    assert_eq!(out.report.mean_acc_delta, rational::from_int(0));
}

#[test]
fn failing_ensemble_skips_only_the_affected_subset() {
    let flaky = EnsembleDiesLater { inner: mock(), ensemble_calls: AtomicUsize::new(0), budget: 6 };
    let out = run_with(&corpus(400), 2, 200, 10, &flaky);
    assert_eq!(out.report.subsets.len(), 1);
    assert_eq!(out.report.subsets[0].subset_index, 0);
    assert_eq!(out.report.skipped.len(), 1);
    assert_eq!(out.report.skipped[0].subset_index, 1);
    let only = &out.report.subsets[0];
    assert_eq!(out.report.mean_cov_delta, only.cov_delta());
    assert!(out.predictions.iter().all(|p| p.subset_index == 0));
}

#[test]
fn artifacts_match_in_memory_records() {
    let out = run(&corpus(200), 2, 100, 5);
    let dir = tempfile::tempdir().unwrap();
    out.write_artifacts(dir.path()).unwrap();
    let lines = |f: &str| std::fs::read_to_string(dir.path().join(f)).unwrap().lines().count();
    assert_eq!(lines("attempts.jsonl"), out.attempts.len());
    assert_eq!(lines("verdicts.jsonl"), out.verdicts.len());
    assert_eq!(lines("predictions.jsonl"), out.predictions.len());
    assert_eq!(lines("results.csv"), 1 + 6 * out.report.subsets.len());
    let report: emocov::harness::ExperimentReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report, out.report);
    let first: serde_json::Value =
        serde_json::from_str(std::fs::read_to_string(dir.path().join("verdicts.jsonl")).unwrap().lines().next().unwrap()).unwrap();
    assert!(first["scores"].as_object().unwrap().values().all(|v| v.as_str().unwrap().contains('/')));
}
