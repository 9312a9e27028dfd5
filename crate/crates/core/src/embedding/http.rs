use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbeddingError, EmbeddingProvider};

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct Response {
    data: Vec<Item>,
}

#[derive(Deserialize)]
struct Item {
    embedding: Vec<f32>,
    #[serde(default)]
    index: Option<usize>,
}

/// Client for a JSON embeddings endpoint:
/// `POST {model, input: [..]}` answered by `{data: [{embedding: [..]}, ..]}`.
pub struct HttpEmbeddingProvider {
    endpoint: String,
    model_id: String,
    agent: ureq::Agent,
}

impl HttpEmbeddingProvider {
    pub fn new(endpoint: impl Into<String>, model_id: impl Into<String>, timeout_secs: f64) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs_f64(timeout_secs.max(0.001))))
            .build()
            .into();
        HttpEmbeddingProvider {
            endpoint: endpoint.into(),
            model_id: model_id.into(),
            agent,
        }
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbeddingError> {
        let body = serde_json::to_vec(&Request { model: &self.model_id, input: texts })
            .map_err(|e| EmbeddingError::Malformed(e.to_string()))?;
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json")
            .send(&body[..])
            .map_err(|e| EmbeddingError::Http(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| EmbeddingError::Http(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(EmbeddingError::Http(format!("status {status}: {text}")));
        }
        let parsed: Response = serde_json::from_str(&text).map_err(|e| EmbeddingError::Malformed(e.to_string()))?;
        let mut items = parsed.data;
        if items.iter().all(|i| i.index.is_some()) {
            items.sort_by_key(|i| i.index);
        }
        Ok(items.into_iter().map(|i| i.embedding).collect())
    }
}
