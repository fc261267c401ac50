//! k-projection coverage of the bundled 400-sentence corpus, k = 1..4.
//!
//! ```text
//! cargo run --example coverage_report
//! ```

use emocov::corpus::{load_corpus, CorpusFormat};
use emocov::coverage::{CoverageConfig, CoverageState};
use emocov::extractor::{Extractor, Lexicon};
use std::error::Error;
use std::path::Path;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixture_400.txt");
    let corpus = load_corpus(&path, CorpusFormat::SemicolonTextLabel)?.strict(&path)?;
    let extractor = Extractor::with_lexicon(Lexicon::builtin());
    let texts: Vec<&str> = corpus.sentences().iter().map(|s| s.text.as_str()).collect();
    let vectors = extractor.extract_all(&texts, 4)?;

    println!("{} sentences, {} distinct feature vectors", corpus.len(), emocov::feature::partition(&vectors).len());
    println!("{:>2}  {:>8}  {:>6}  {:>8}", "k", "covered", "total", "cov %");
    for k in 1..=4 {
        let mut state = CoverageState::new(CoverageConfig::new(k)?);
        state.add_suite(&vectors);
        let r = state.report();
        println!("{k:>2}  {:>8}  {:>6}  {:>8.2}", r.covered_count, r.total_cells, r.cov_percent());
        if k == 2 {
            for (projection, covered) in &r.per_projection {
                println!("      {projection:<12} {covered:>3} / 36");
            }
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
