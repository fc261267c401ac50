//! Ranks the uncovered cells of a tiny suite and renders their prompts,
//! with the default template and with a per-kind one.

use emocov::augmentor::{plan_gaps, prompt_for_cell, AugmentorConfig, build_prompt};
use emocov::coverage::{CoverageConfig, CoverageState};
use emocov::extractor::{Extractor, Lexicon};
use std::error::Error;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let extractor = Extractor::with_lexicon(Lexicon::builtin());
    let suite = [
        "we celebrated happily after the wonderful meeting",
        "she wept alone",
        "he slammed the door and yelled",
        "they fled from the danger",
    ];
    let mut state = CoverageState::new(CoverageConfig::new(2)?);
    for text in suite {
        let fv = extractor.extract(text)?;
        println!("{fv}  <- {text}");
        state.add_vector(&fv);
    }
    let report = state.report();
    println!("coverage {}/{}\n", report.covered_count, report.total_cells);

    let cfg = AugmentorConfig::default();
    let plan = plan_gaps(&state, 8);
    for gap in &plan {
        println!("#{:<2} score {:>2}  {}", gap.priority, gap.score, gap.cell);
        println!("    {}", build_prompt(gap, &cfg)?);
    }

    let template = "Write one tweet whose verb expresses {verb} and whose noun expresses {noun}.";
    let verb_noun = plan.iter().find(|g| g.cell.projection().name() == "verb+noun");
    if let Some(gap) = verb_noun {
        println!("\ncustom template: {}", prompt_for_cell(&gap.cell, template)?);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
