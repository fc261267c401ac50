//! Loading a semicolon corpus with bad lines, then saving and reloading
//! the native JSONL form.

use emocov::corpus::{load_suite, parse_corpus, save_suite, CorpusFormat};
use std::error::Error;

const RAW: &str = "\
i feel wonderful today;joy
# comments and blank lines are skipped

ugh; my train is late again;anger
this line has no label
what a day;ecstatic
missing them so much;sadness
";

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let loaded = parse_corpus(RAW, "tweets.txt", "tweets", CorpusFormat::SemicolonTextLabel);
    println!("{} records: {} kept, {} rejected", loaded.records, loaded.suite.len(), loaded.rejected.len());
    for err in &loaded.rejected {
        println!("  {err}");
    }
    for s in loaded.suite.sentences() {
        println!("  {:<14} {:<8} {}", s.id, s.gold_label.map(|l| l.to_string()).unwrap_or_default(), s.text);
    }

    let path = std::env::temp_dir().join(format!("emocov-roundtrip-{}.jsonl", std::process::id()));
    save_suite(&loaded.suite, &path)?;
    let back = load_suite(&path)?;
    std::fs::remove_file(&path)?;
    assert_eq!(back.sentences(), loaded.suite.sentences());
    println!("native round-trip ok ({} sentences)", back.len());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
