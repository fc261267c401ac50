//! HTTP clients against the in-process stand-in server.

mod common;

use common::*;
use emocov::arbiter::Ensemble;
use emocov::augmentor::AugmentorConfig;
use emocov::corpus::{load_corpus, CorpusFormat};
use emocov::extractor::{Extractor, Lexicon};
use emocov::harness::{run_experiment, Pipeline, SutProfile};
use emocov::wire::http::{HttpClassifier, HttpClient, HttpGenerator, HttpWordTagger};
use emocov::wire::mock::{FaultRegion, MockBackend, MockModel};
use emocov::wire::standin::StandinServer;
use emocov::wire::{Classifier, Generator, Health, WireError};
use std::sync::Arc;

fn backend() -> MockBackend {
    MockBackend::builtin(3)
        .with_model("sut", MockModel::Faulty(FaultRegion::MixedEmotion))
        .with_model("noisy", MockModel::Hash)
}

fn texts() -> Vec<String> {
    ["She laughed happily", "He wept angrily near the grave", "nothing here", "They fled in terror"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[test]
fn classify_over_http_matches_in_process_backend() {
    let server = StandinServer::start(backend()).unwrap();
    let http = HttpClassifier::new(HttpClient::new(0));
    let local = backend();
    for model in ["sut", "noisy", "plain"] {
        let got = http.classify(server.url(), model, &texts()).unwrap();
        let want: Vec<_> = texts().iter().map(|t| local.classify_one(model, t)).collect();
        assert_eq!(got, want, "{model}");
    }
    http.probe(server.url()).unwrap();
}

#[test]
fn health_reports_mock_mode() {
    let server = StandinServer::start(backend()).unwrap();
    let health: Health = HttpClient::new(0).get_json(server.url(), "/healthz").unwrap();
    assert_eq!(health.mode, "mock");
}

#[test]
fn transient_failures_are_retried() {
    let server = StandinServer::start(backend()).unwrap();
    server.fail_next(2);
    let http = HttpClassifier::new(HttpClient::new(2));
    let labels = http.classify(server.url(), "plain", &texts()).unwrap();
    assert_eq!(labels.len(), 4);
    assert_eq!(server.requests_served(), 3);
}

#[test]
fn exhausted_retries_report_unavailable() {
    let server = StandinServer::start(backend()).unwrap();
    server.fail_next(10);
    let http = HttpClassifier::new(HttpClient::new(1));
    let err = http.classify(server.url(), "plain", &texts()).unwrap_err();
    assert!(matches!(err, WireError::Unavailable { .. }), "{err}");
    assert_eq!(server.requests_served(), 2);
}

#[test]
fn down_server_fails_probe_and_closed_port_is_unavailable() {
    let server = StandinServer::start(backend()).unwrap();
    server.set_down(true);
    let http = HttpClassifier::new(HttpClient::new(0));
    assert!(matches!(http.probe(server.url()), Err(WireError::Unavailable { .. })));
    server.set_down(false);
    http.probe(server.url()).unwrap();

    let url = server.url().to_string();
    drop(server);
    assert!(matches!(http.classify(&url, "plain", &texts()), Err(WireError::Unavailable { .. })));
}

#[test]
fn client_errors_are_not_retried() {
    let server = StandinServer::start(backend()).unwrap();
    let generator = HttpGenerator::new(HttpClient::new(3), server.url());
    let err = generator.generate("").unwrap_err();
    assert!(matches!(err, WireError::Rejected { status: 400, .. }), "{err}");
    assert_eq!(server.requests_served(), 1);
    let missing: Result<Health, _> = HttpClient::new(3).get_json(server.url(), "/nope");
    assert!(matches!(missing, Err(WireError::Rejected { status: 404, .. })));
}

#[test]
fn remote_tagger_agrees_with_local_lexicon() {
    let server = StandinServer::start(backend()).unwrap();
    let remote = Extractor::with_tagger(Arc::new(HttpWordTagger::new(HttpClient::new(0), server.url())));
    let local = Extractor::with_lexicon(Lexicon::builtin());
    let corpus = load_corpus(&data("fixture_400.txt"), CorpusFormat::SemicolonTextLabel).unwrap().suite;
    let sample: Vec<&str> = corpus.sentences().iter().take(60).map(|s| s.text.as_str()).collect();
    assert_eq!(remote.extract_all(&sample, 4).unwrap(), local.extract_all(&sample, 1).unwrap());
}

#[test]
fn experiment_over_http_matches_in_process_run() {
    let server = StandinServer::start(backend()).unwrap();
    let corpus = load_corpus(&data("fixture_400.txt"), CorpusFormat::SemicolonTextLabel).unwrap().suite;
    let corpus = emocov::TestSuite::new("fx", corpus.sentences()[..120].to_vec()).unwrap();
    let augmentor = AugmentorConfig { max_new_sentences: 10, ..AugmentorConfig::default() };
    let extractor = Extractor::with_lexicon(Lexicon::builtin());

    let local = backend();
    let local_sut = SutProfile { name: "sut".into(), endpoint: "mock".into() };
    let local_ensemble = Ensemble::reference("mock");
    let in_process = run_experiment(
        &corpus,
        2,
        60,
        &Pipeline {
            extractor: &extractor,
            generator: &local,
            classifier: &local,
            ensemble: &local_ensemble,
            sut: &local_sut,
            augmentor: &augmentor,
            max_inflight: 2,
        },
    )
    .unwrap();

    let http_classifier = HttpClassifier::new(HttpClient::new(1));
    let http_generator = HttpGenerator::new(HttpClient::new(1), server.url());
    let sut = SutProfile { name: "sut".into(), endpoint: server.url().into() };
    let ensemble = Ensemble::reference(server.url());
    let over_http = run_experiment(
        &corpus,
        2,
        60,
        &Pipeline {
            extractor: &extractor,
            generator: &http_generator,
            classifier: &http_classifier,
            ensemble: &ensemble,
            sut: &sut,
            augmentor: &augmentor,
            max_inflight: 4,
        },
    )
    .unwrap();
    assert_eq!(over_http.report, in_process.report);
    assert_eq!(over_http.report.subsets.len(), 2);
}
