//! The wire contract over real HTTP, served by the in-process stand-in.

use emocov::extractor::Extractor;
use emocov::wire::http::{HttpClassifier, HttpClient, HttpGenerator, HttpWordTagger};
use emocov::wire::mock::MockBackend;
use emocov::wire::standin::StandinServer;
use emocov::wire::{Classifier, Generator, Health};
use std::error::Error;
use std::sync::Arc;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let server = StandinServer::start(MockBackend::builtin(0))?;
    let url = server.url().to_string();
    let client = HttpClient::new(2);

    let health: Health = client.get_json(&url, "/healthz")?;
    println!("{url} is up in {} mode", health.mode);

    let prompt = "Generate a sentence with a verb labeled as fear and an adverb labeled as surprise";
    let sentence = HttpGenerator::new(client.clone(), &url).generate(prompt)?;
    println!("generated: {sentence}");

    let extractor = Extractor::with_tagger(Arc::new(HttpWordTagger::new(client.clone(), &url)));
    println!("features:  {}", extractor.extract(&sentence)?);

    // two 503s are absorbed by the retry budget
    server.fail_next(2);
    let labels = HttpClassifier::new(client).classify(&url, "any-model", &[sentence])?;
    println!("label:     {} after {} requests", labels[0], server.requests_served());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
