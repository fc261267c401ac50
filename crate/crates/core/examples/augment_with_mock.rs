//! Fills coverage gaps with the offline mock generator and checks every
//! accepted sentence against its target cell.

use emocov::augmentor::{fill_gaps, AugmentorConfig};
use emocov::corpus::parse_corpus;
use emocov::corpus::CorpusFormat;
use emocov::coverage::{CoverageConfig, CoverageState};
use emocov::extractor::{Extractor, Lexicon};
use emocov::wire::mock::MockBackend;
use std::error::Error;

const SEED: &str = "\
i laughed so hard at the party;joy
my dog fled from the thunder;fear
she sighed about the lonely weekend;sadness
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let suite = parse_corpus(SEED, "seed.txt", "seed", CorpusFormat::SemicolonTextLabel).strict("seed.txt".as_ref())?;
    let extractor = Extractor::with_lexicon(Lexicon::builtin());
    let mut state = CoverageState::new(CoverageConfig::new(2)?);
    for s in suite.sentences() {
        state.add_vector(&extractor.extract(&s.text)?);
    }

    let generator = MockBackend::builtin(42);
    let cfg = AugmentorConfig { max_new_sentences: 12, ..AugmentorConfig::default() };
    let aug = fill_gaps(&suite, &state, &cfg, &extractor, &generator, 4)?;

    for a in aug.attempts.iter().filter(|a| a.accepted) {
        println!("{:<28} {}", a.gap.to_string(), a.candidate);
        assert!(a.gap.matches(&extractor.extract(&a.candidate)?));
    }
    println!(
        "\n{} attempts, {} accepted; coverage {} -> {} of {}",
        aug.attempts.len(),
        aug.generated_ids.len(),
        state.covered_count(),
        aug.state.covered_count(),
        state.total_cells()
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
