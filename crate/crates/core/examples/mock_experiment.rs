//! The full before/after protocol, offline, driven by `data/mock_run.toml`.
//!
//! The mock SUT is wrong only on sentences mixing two emotions. The corpus
//! has none, so its accuracy drops only once generated sentences fill those
//! cells.

use emocov::config::{RunConfig, Services};
use emocov::harness::{run_experiment, Pipeline};
use emocov::rational;
use std::error::Error;
use std::path::Path;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let cfg = RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mock_run.toml"))?;
    let services = Services::build(&cfg)?;
    let corpus_path = cfg.corpus.clone().ok_or("config names no corpus")?;
    let corpus = emocov::corpus::load_corpus(&corpus_path, emocov::corpus::CorpusFormat::SemicolonTextLabel)?.strict(&corpus_path)?;
    let ensemble = cfg.resolve_ensemble()?;
    let pipeline = Pipeline {
        extractor: &services.extractor,
        generator: services.generator.as_ref(),
        classifier: services.classifier.as_ref(),
        ensemble: &ensemble,
        sut: &cfg.sut,
        augmentor: &cfg.augmentor,
        max_inflight: cfg.max_inflight,
    };
    let run = run_experiment(&corpus, cfg.coverage.k(), cfg.chunk_size, &pipeline)?;

    let pct = |r: &rational::Rational| rational::decimal(&(r * rational::from_int(100)), 2);
    println!("subset  size      coverage %         accuracy %");
    for s in &run.report.subsets {
        println!(
            "{:>6}  {:>3}->{:<3} {:>7} -> {:<7} {:>7} -> {}",
            s.subset_index,
            s.size_before,
            s.size_after,
            pct(&s.cov_before),
            pct(&s.cov_after),
            pct(&s.acc_before),
            pct(&s.acc_after)
        );
    }
    println!("mean deltas: coverage {} pts, accuracy {} pts", pct(&run.report.mean_cov_delta), pct(&run.report.mean_acc_delta));
    assert!(run.report.mean_cov_delta > rational::from_int(0));
    assert!(run.report.mean_acc_delta < rational::from_int(0));
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
