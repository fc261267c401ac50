//! Serves a [`MockBackend`] over the HTTP contract on a local port.
//!
//! Used by client tests and examples so the HTTP path is exercised without
//! the external model service. Failures can be injected to test retries.

use super::mock::MockBackend;
use super::{
    ClassifyRequest, ClassifyResponse, Classifier, ErrorBody, GenerateRequest, GenerateResponse, Generator, Health,
    WireError, WordEmotionsRequest, WordEmotionsResponse, WordTagger,
};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use tiny_http::{Header, Method, Request, Response, Server};

#[derive(Default)]
struct Faults {
    fail_next: AtomicUsize,
    down: AtomicBool,
    served: AtomicUsize,
}

pub struct StandinServer {
    server: Arc<Server>,
    url: String,
    faults: Arc<Faults>,
    handle: Option<JoinHandle<()>>,
}

impl StandinServer {
    /// Binds `127.0.0.1` on an ephemeral port and starts serving.
    pub fn start(backend: MockBackend) -> std::io::Result<Self> {
        let server = Server::http("127.0.0.1:0").map_err(std::io::Error::other)?;
        let addr = server.server_addr().to_ip().ok_or_else(|| std::io::Error::other("no ip address"))?;
        let server = Arc::new(server);
        let faults = Arc::new(Faults::default());
        let backend = Arc::new(backend);
        let handle = {
            let server = Arc::clone(&server);
            let faults = Arc::clone(&faults);
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    let backend = Arc::clone(&backend);
                    let faults = Arc::clone(&faults);
                    std::thread::spawn(move || handle(&backend, &faults, request));
                }
            })
        };
        Ok(StandinServer { server, url: format!("http://{addr}"), faults, handle: Some(handle) })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// The next `n` requests are answered with 503.
    pub fn fail_next(&self, n: usize) {
        self.faults.fail_next.store(n, Ordering::SeqCst);
    }

    /// While down, every request is answered with 503.
    pub fn set_down(&self, down: bool) {
        self.faults.down.store(down, Ordering::SeqCst);
    }

    /// Number of requests received so far, including failed ones.
    pub fn requests_served(&self) -> usize {
        self.faults.served.load(Ordering::SeqCst)
    }
}

impl Drop for StandinServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn json_response<T: Serialize>(status: u16, body: &T) -> Response<std::io::Cursor<Vec<u8>>> {
    let bytes = serde_json::to_vec(body).expect("response bodies serialize");
    let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    Response::from_data(bytes).with_status_code(status).with_header(header)
}

fn error(status: u16, msg: impl Into<String>) -> Response<std::io::Cursor<Vec<u8>>> {
    json_response(status, &ErrorBody { error: msg.into() })
}

fn decode<T: DeserializeOwned>(body: &str) -> Result<T, Response<std::io::Cursor<Vec<u8>>>> {
    serde_json::from_str(body).map_err(|e| error(400, format!("malformed request: {e}")))
}

fn from_wire(e: WireError) -> Response<std::io::Cursor<Vec<u8>>> {
    match e {
        WireError::Rejected { status, body, .. } => error(status, body),
        WireError::Unavailable { reason, .. } => error(503, reason),
        WireError::Decode { reason, .. } => error(500, reason),
    }
}

fn route(backend: &MockBackend, method: &Method, path: &str, body: &str) -> Response<std::io::Cursor<Vec<u8>>> {
    let result = match (method, path) {
        (Method::Get, "/healthz") => {
            return json_response(200, &Health { mode: "mock".into(), models: backend.model_names() });
        }
        (Method::Post, "/classify") => decode::<ClassifyRequest>(body).map(|req| {
            match backend.classify("", &req.model, &req.texts) {
                Ok(labels) => json_response(
                    200,
                    &ClassifyResponse { labels: labels.iter().map(|l| l.to_string()).collect(), latency_ms: 0.0 },
                ),
                Err(e) => from_wire(e),
            }
        }),
        (Method::Post, "/word-emotions") => decode::<WordEmotionsRequest>(body).map(|req| {
            match backend.word_emotions(&req.tokens) {
                Ok(tags) => json_response(200, &WordEmotionsResponse { tags }),
                Err(e) => from_wire(e),
            }
        }),
        (Method::Post, "/generate") => decode::<GenerateRequest>(body).map(|req| match backend.generate(&req.prompt) {
            Ok(text) => json_response(200, &GenerateResponse { text }),
            Err(e) => from_wire(e),
        }),
        _ => Ok(error(404, format!("no route for {method} {path}"))),
    };
    result.unwrap_or_else(|resp| resp)
}

fn handle(backend: &MockBackend, faults: &Faults, mut request: Request) {
    faults.served.fetch_add(1, Ordering::SeqCst);
    let injected = faults.down.load(Ordering::SeqCst)
        || faults
            .fail_next
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok();
    let response = if injected {
        error(503, "injected failure")
    } else {
        let mut body = String::new();
        match request.as_reader().read_to_string(&mut body) {
            Ok(_) => {
                let path = request.url().split('?').next().unwrap_or("").to_string();
                route(backend, request.method(), &path, &body)
            }
            Err(e) => error(400, format!("unreadable body: {e}")),
        }
    };
    let _ = request.respond(response);
}
