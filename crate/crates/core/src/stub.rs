//! In-process HTTP stand-in for the external services: open-access
//! resolver, publisher full-text API, embeddings and chat endpoints.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Instant;

use serde::Deserialize;
use serde_json::json;
use tiny_http::{Header, Method, Response, Server};

use crate::embedding::{EmbeddingProvider, HashingProvider, DEFAULT_DIM};
use crate::llmextract::{ChatConfig, ChatMessage, ChatProvider, HeuristicResponder};

#[derive(Debug, Clone, Default)]
pub struct StubFixtures {
    /// DOI to the name of an open-access file under `/files/`; `None`
    /// means known but closed.
    pub open_access: BTreeMap<String, Option<String>>,
    pub files: BTreeMap<String, String>,
    /// DOI to article XML; `None` means the token is not entitled.
    pub publisher: BTreeMap<String, Option<String>>,
    pub token: String,
    /// Answer this many of the first requests with 503.
    pub flaky: u32,
}

#[derive(Debug, Clone)]
pub struct Hit {
    pub path: String,
    pub at: Instant,
}

pub struct StubServer {
    server: Arc<Server>,
    port: u16,
    hits: Arc<Mutex<Vec<Hit>>>,
    handle: Option<JoinHandle<()>>,
}

#[derive(Deserialize)]
struct ChatRequest {
    model: String,
    #[serde(default)]
    temperature: f64,
    messages: Vec<ChatMessage>,
}

#[derive(Deserialize)]
struct EmbedRequest {
    input: Vec<String>,
}

fn json_header() -> Header {
    Header::from_bytes("Content-Type", "application/json").expect("static header")
}

struct State {
    fx: StubFixtures,
    base: String,
    served: u32,
    embedder: HashingProvider,
    chat: HeuristicResponder,
}

impl State {
    fn answer(&mut self, method: &Method, path: &str, token: Option<&str>, body: &str) -> (u16, String) {
        self.served += 1;
        if self.served <= self.fx.flaky {
            return (503, "busy".into());
        }
        let path = path.split('?').next().unwrap_or(path);
        match (method, path) {
            (Method::Get, p) if p.starts_with("/oa/") => match self.fx.open_access.get(&p[4..]) {
                None => (404, json!({"error": "unknown doi"}).to_string()),
                Some(None) => (200, json!({"doi": &p[4..], "is_oa": false, "best_oa_location": null}).to_string()),
                Some(Some(file)) => {
                    let url = format!("{}/files/{file}", self.base);
                    (200, json!({"doi": &p[4..], "is_oa": true, "best_oa_location": {"url_for_pdf": url}}).to_string())
                }
            },
            (Method::Get, p) if p.starts_with("/files/") => match self.fx.files.get(&p[7..]) {
                Some(b) => (200, b.clone()),
                None => (404, String::new()),
            },
            (Method::Get, p) if p.starts_with("/publisher/") => {
                if token != Some(self.fx.token.as_str()) {
                    return (401, "<error>invalid api key</error>".into());
                }
                match self.fx.publisher.get(&p[11..]) {
                    None => (404, "<error>not found</error>".into()),
                    Some(None) => (403, "<error>not entitled</error>".into()),
                    Some(Some(xml)) => (200, xml.clone()),
                }
            }
            (Method::Post, "/embeddings") => match serde_json::from_str::<EmbedRequest>(body) {
                Ok(r) => {
                    let texts: Vec<&str> = r.input.iter().map(String::as_str).collect();
                    match self.embedder.embed(&texts) {
                        Ok(v) => {
                            let data: Vec<_> =
                                v.iter().enumerate().map(|(i, e)| json!({"index": i, "embedding": e})).collect();
                            (200, json!({"data": data}).to_string())
                        }
                        Err(e) => (500, e.to_string()),
                    }
                }
                Err(e) => (400, e.to_string()),
            },
            (Method::Post, "/chat") => match serde_json::from_str::<ChatRequest>(body) {
                Ok(r) => {
                    let cfg = ChatConfig { model_id: r.model, temperature: r.temperature, ..ChatConfig::default() };
                    match self.chat.complete(&cfg, &r.messages) {
                        Ok(c) => (200, json!({"choices": [{"message": {"role": "assistant", "content": c}}]}).to_string()),
                        Err(e) => (422, e.to_string()),
                    }
                }
                Err(e) => (400, e.to_string()),
            },
            _ => (404, String::new()),
        }
    }
}

impl StubServer {
    pub fn start(fixtures: StubFixtures) -> std::io::Result<StubServer> {
        let server = Arc::new(Server::http("127.0.0.1:0").map_err(std::io::Error::other)?);
        let port = server.server_addr().to_ip().map(|a| a.port()).ok_or_else(|| std::io::Error::other("no ip address"))?;
        let hits = Arc::new(Mutex::new(Vec::new()));
        let mut state = State {
            fx: fixtures,
            base: format!("http://127.0.0.1:{port}"),
            served: 0,
            embedder: HashingProvider::new(DEFAULT_DIM, 0),
            chat: HeuristicResponder::new(),
        };
        let (srv, log) = (Arc::clone(&server), Arc::clone(&hits));
        let handle = std::thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let at = Instant::now();
                let path = req.url().to_string();
                log.lock().unwrap_or_else(|e| e.into_inner()).push(Hit { path: path.clone(), at });
                let token = req
                    .headers()
                    .iter()
                    .find(|h| h.field.equiv("X-ELS-APIKey"))
                    .map(|h| h.value.as_str().to_string());
                let mut body = String::new();
                let _ = req.as_reader().read_to_string(&mut body);
                let (status, text) = state.answer(req.method(), &path, token.as_deref(), &body);
                let _ = req.respond(Response::from_string(text).with_status_code(status).with_header(json_header()));
            }
        });
        Ok(StubServer { server, port, hits, handle: Some(handle) })
    }

    pub fn base_url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    /// Requests received so far whose path starts with `prefix`.
    pub fn hits(&self, prefix: &str) -> Vec<Hit> {
        self.hits
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .filter(|h| h.path.starts_with(prefix))
            .cloned()
            .collect()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}
