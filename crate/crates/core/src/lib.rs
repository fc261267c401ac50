//! Black-box test adequacy for emotion classifiers.
//!
//! Sentences are mapped to a four-feature emotional vector (verb, adjective,
//! adverb, noun), test suites are scored by k-projection coverage over that
//! space, uncovered cells are turned into generation prompts, generated
//! sentences are labeled by accuracy-weighted ensemble vote, and a
//! system under test is re-evaluated on the augmented suite.
//!
//! ```
//! use emocov::coverage::{CoverageConfig, CoverageState};
//! use emocov::extractor::{Extractor, Lexicon};
//!
//! let extractor = Extractor::with_lexicon(Lexicon::builtin());
//! let fv = extractor.extract("She laughed nervously").unwrap();
//! let mut state = CoverageState::new(CoverageConfig::new(2).unwrap());
//! state.add_vector(&fv);
//! assert_eq!(state.report().covered_count, 6);
//! ```

pub mod arbiter;
pub mod augmentor;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod coverage;
pub mod extractor;
pub mod feature;
pub mod harness;
pub mod rational;
pub mod wire;

mod util;

pub use feature::{CorpusLabel, EmotionLabel, FeatureKind, FeatureVector, Origin, Sentence, TestSuite};
