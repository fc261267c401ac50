//! Projections and cell counts, first for a binary 4-feature space and
//! then for the full six-label space.

use emocov::coverage::{binomial, enumerate_projections, CoverageConfig, CoverageState};
use emocov::{EmotionLabel, FeatureVector};
use std::error::Error;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    println!("binary space (two values per feature)");
    for k in 1..=4 {
        let cfg = CoverageConfig::with_alpha(k, 2)?;
        let names: Vec<String> = enumerate_projections(&cfg).iter().map(|p| p.name()).collect();
        println!("  k={k}: {} projections x {} cases  {}", names.len(), cfg.cells_per_projection(), names.join(" "));
    }
    let counts: Vec<(usize, usize)> = (1..=4)
        .map(|k| CoverageConfig::with_alpha(k, 2).map(|c| (c.projection_count(), c.cells_per_projection())))
        .collect::<Result<_, _>>()?;
    assert_eq!(counts, [(4, 2), (6, 4), (4, 8), (1, 16)]);

    // all 16 binary vectors cover every cell of every k
    let binary = [EmotionLabel::Joy, EmotionLabel::Anger];
    let vectors: Vec<FeatureVector> = (0..16)
        .map(|i: usize| FeatureVector::new(binary[i >> 3 & 1], binary[i >> 2 & 1], binary[i >> 1 & 1], binary[i & 1]))
        .collect();
    for k in 1..=4 {
        let mut state = CoverageState::new(CoverageConfig::with_alpha(k, 2)?);
        state.add_suite(&vectors);
        assert!(state.is_complete());
    }

    println!("six labels per feature");
    for k in 1..=4 {
        let cfg = CoverageConfig::new(k)?;
        println!("  k={k}: C(4,{k}) * 6^{k} = {} * {} = {}", binomial(4, k), cfg.cells_per_projection(), cfg.total_cells());
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
