//! Accuracy-weighted voting: a 3-vs-3 split, then live votes from the mock
//! ensemble on a few sentences.

use emocov::arbiter::{verdict, Arbiter, Ensemble};
use emocov::rational;
use emocov::wire::mock::{MockBackend, MockModel};
use emocov::CorpusLabel::*;
use std::error::Error;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let ensemble = Ensemble::reference("mock");
    for m in ensemble.models() {
        println!("{:<34} {}", m.name, rational::decimal(&m.accuracy, 3));
    }

    // joy from models 1, 2, 4; sadness from models 3, 5, 6
    let split = verdict("split", &ensemble, &[Joy, Joy, Sadness, Joy, Sadness, Sadness]);
    for (label, score) in &split.scores {
        println!("{:<8} {} ({})", label.as_str(), rational::display(score), rational::decimal(score, 3));
    }
    println!("winner {} by {}\n", split.label, rational::display(&split.margin));
    assert_eq!(split.label, Sadness);

    let mock = MockBackend::builtin(1)
        .with_model("xtremedistil-emotion", MockModel::Hash)
        .with_model("bertweet-emotion-base", MockModel::Hash);
    let arbiter = Arbiter::new(&ensemble, &mock, 2);
    let items: Vec<(String, String)> = [
        "Someone wept sadly near the funeral.",
        "Someone cheered angrily.",
        "Someone stood near the place.",
    ]
    .iter()
    .enumerate()
    .map(|(i, t)| (format!("s{i}"), t.to_string()))
    .collect();
    for (v, (_, text)) in arbiter.arbitrate_batch(&items)?.iter().zip(&items) {
        let votes: Vec<String> = v.per_model.values().map(|l| l.to_string()).collect();
        println!("{text}\n  votes [{}] -> {} (margin {})", votes.join(", "), v.label, rational::decimal(&v.margin, 3));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
