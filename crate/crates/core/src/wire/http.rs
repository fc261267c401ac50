//! Blocking HTTP clients for the model service.

use super::{
    parse_labels, ClassifyRequest, ClassifyResponse, Classifier, GenerateRequest, GenerateResponse, Generator,
    WireError, WordEmotionsRequest, WordEmotionsResponse, WordTag, WordTagger,
};
use crate::feature::CorpusLabel;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::time::Duration;

const REQUEST_TIMEOUT: Duration = Duration::from_secs(60);
const BACKOFF_BASE: Duration = Duration::from_millis(25);

/// Shared HTTP agent with retry on transport errors, 429 and 5xx.
#[derive(Clone)]
pub struct HttpClient {
    agent: ureq::Agent,
    retry_limit: u32,
    bearer: Option<String>,
}

impl std::fmt::Debug for HttpClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpClient")
            .field("retry_limit", &self.retry_limit)
            .field("bearer", &self.bearer.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

// ureq's own error type is large; it never leaves this impl
#[allow(clippy::result_large_err)]
impl HttpClient {
    pub fn new(retry_limit: u32) -> Self {
        HttpClient {
            // no idle pooling: a restarted service must not leave us reading a stale socket
            agent: ureq::AgentBuilder::new().timeout(REQUEST_TIMEOUT).max_idle_connections(0).build(),
            retry_limit,
            bearer: None,
        }
    }

    /// Sends `Authorization: Bearer <token>` on every request.
    pub fn with_bearer(mut self, token: Option<String>) -> Self {
        self.bearer = token;
        self
    }

    pub fn retry_limit(&self) -> u32 {
        self.retry_limit
    }

    fn url(base: &str, route: &str) -> String {
        format!("{}{}", base.trim_end_matches('/'), route)
    }

    pub fn post_json<Req: Serialize, Resp: DeserializeOwned>(&self, base: &str, route: &str, body: &Req) -> Result<Resp, WireError> {
        let url = Self::url(base, route);
        self.with_retries(&url, || {
            let mut req = self.agent.post(&url);
            if let Some(token) = &self.bearer {
                req = req.set("Authorization", &format!("Bearer {token}"));
            }
            req.send_json(body)
        })
    }

    pub fn get_json<Resp: DeserializeOwned>(&self, base: &str, route: &str) -> Result<Resp, WireError> {
        let url = Self::url(base, route);
        self.with_retries(&url, || self.agent.get(&url).call())
    }

    fn with_retries<Resp: DeserializeOwned>(
        &self,
        url: &str,
        send: impl Fn() -> Result<ureq::Response, ureq::Error>,
    ) -> Result<Resp, WireError> {
        let mut last = String::new();
        for attempt in 0..=self.retry_limit {
            if attempt > 0 {
                std::thread::sleep(BACKOFF_BASE * (1 << attempt.min(6)));
            }
            match send() {
                Ok(resp) => {
                    return resp.into_json::<Resp>().map_err(|e| WireError::Decode {
                        endpoint: url.to_string(),
                        reason: e.to_string(),
                    })
                }
                Err(ureq::Error::Status(code, resp)) if code == 429 || code >= 500 => {
                    last = format!("status {code}: {}", resp.into_string().unwrap_or_default());
                }
                Err(ureq::Error::Status(code, resp)) => {
                    return Err(WireError::Rejected {
                        endpoint: url.to_string(),
                        status: code,
                        body: resp.into_string().unwrap_or_default(),
                    })
                }
                Err(ureq::Error::Transport(t)) => last = t.to_string(),
            }
            log::debug!("request to {url} failed (attempt {}): {last}", attempt + 1);
        }
        Err(WireError::Unavailable { endpoint: url.to_string(), reason: last })
    }
}

/// Classifier over `POST {endpoint}/classify`.
#[derive(Debug, Clone)]
pub struct HttpClassifier {
    client: HttpClient,
}

impl HttpClassifier {
    pub fn new(client: HttpClient) -> Self {
        HttpClassifier { client }
    }
}

impl Classifier for HttpClassifier {
    fn classify(&self, endpoint: &str, model: &str, texts: &[String]) -> Result<Vec<CorpusLabel>, WireError> {
        let req = ClassifyRequest { model: model.to_string(), texts: texts.to_vec() };
        let resp: ClassifyResponse = self.client.post_json(endpoint, "/classify", &req)?;
        if resp.labels.len() != texts.len() {
            return Err(WireError::Decode {
                endpoint: endpoint.to_string(),
                reason: format!("expected {} labels, got {}", texts.len(), resp.labels.len()),
            });
        }
        parse_labels(endpoint, &resp.labels)
    }

    fn probe(&self, endpoint: &str) -> Result<(), WireError> {
        self.client.get_json::<super::Health>(endpoint, "/healthz").map(|_| ())
    }
}

#[derive(Debug, Clone)]
pub struct HttpWordTagger {
    client: HttpClient,
    endpoint: String,
}

impl HttpWordTagger {
    pub fn new(client: HttpClient, endpoint: impl Into<String>) -> Self {
        HttpWordTagger { client, endpoint: endpoint.into() }
    }
}

impl WordTagger for HttpWordTagger {
    fn word_emotions(&self, tokens: &[String]) -> Result<Vec<WordTag>, WireError> {
        let req = WordEmotionsRequest { tokens: tokens.to_vec() };
        let resp: WordEmotionsResponse = self.client.post_json(&self.endpoint, "/word-emotions", &req)?;
        Ok(resp.tags)
    }
}

#[derive(Debug, Clone)]
pub struct HttpGenerator {
    client: HttpClient,
    endpoint: String,
}

impl HttpGenerator {
    pub fn new(client: HttpClient, endpoint: impl Into<String>) -> Self {
        HttpGenerator { client, endpoint: endpoint.into() }
    }
}

impl Generator for HttpGenerator {
    fn generate(&self, prompt: &str) -> Result<String, WireError> {
        let req = GenerateRequest { prompt: prompt.to_string() };
        let resp: GenerateResponse = self.client.post_json(&self.endpoint, "/generate", &req)?;
        Ok(resp.text)
    }
}
