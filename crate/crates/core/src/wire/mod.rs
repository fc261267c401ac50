//! JSON-over-HTTP contract with the model service, and the client traits the
//! rest of the crate programs against.
//!
//! | route                | request                      | response                        |
//! |----------------------|------------------------------|---------------------------------|
//! | `POST /classify`     | `{model, texts: [string]}`   | `{labels: [string], latency_ms}`|
//! | `POST /word-emotions`| `{tokens: [string]}`         | `{tags: [{pos, emotion}]}`      |
//! | `POST /generate`     | `{prompt}`                   | `{text}`                        |
//! | `GET /healthz`       |                              | `{mode, models: [string]}`      |
//!
//! [`http`] implements the traits over the network, [`mock`] implements them
//! in-process, and [`standin`] serves the mock over real HTTP for client tests.

pub mod http;
pub mod mock;
pub mod standin;

use crate::extractor::Pos;
use crate::feature::{CorpusLabel, EmotionLabel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub model: String,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub labels: Vec<String>,
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordEmotionsRequest {
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordTag {
    pub pos: Pos,
    pub emotion: EmotionLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordEmotionsResponse {
    pub tags: Vec<WordTag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub mode: String,
    pub models: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    /// Transport failure or retryable status after all retries.
    #[error("{endpoint} unavailable: {reason}")]
    Unavailable { endpoint: String, reason: String },
    /// Non-retryable error status (4xx other than 429).
    #[error("{endpoint} rejected request with status {status}: {body}")]
    Rejected { endpoint: String, status: u16, body: String },
    #[error("{endpoint} returned an undecodable response: {reason}")]
    Decode { endpoint: String, reason: String },
}

/// Sentence classifier service. `endpoint` is the service base URL.
pub trait Classifier: Send + Sync {
    fn classify(&self, endpoint: &str, model: &str, texts: &[String]) -> Result<Vec<CorpusLabel>, WireError>;

    /// Checks that the service answers at all.
    fn probe(&self, endpoint: &str) -> Result<(), WireError> {
        let _ = endpoint;
        Ok(())
    }
}

/// Word-level part-of-speech and emotion tagger.
pub trait WordTagger: Send + Sync {
    fn word_emotions(&self, tokens: &[String]) -> Result<Vec<WordTag>, WireError>;
}

/// Text generator driven by a natural-language prompt.
pub trait Generator: Send + Sync {
    fn generate(&self, prompt: &str) -> Result<String, WireError>;
}

pub(crate) fn parse_labels(endpoint: &str, raw: &[String]) -> Result<Vec<CorpusLabel>, WireError> {
    raw.iter()
        .map(|l| {
            l.parse().map_err(|_| WireError::Decode {
                endpoint: endpoint.to_string(),
                reason: format!("unknown label `{l}`"),
            })
        })
        .collect()
}
