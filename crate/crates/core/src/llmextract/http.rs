use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ChatConfig, ChatMessage, ChatProvider, LlmError};

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    temperature: f64,
    max_tokens: usize,
    messages: &'a [ChatMessage],
}

#[derive(Deserialize)]
struct Response {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

/// Chat-completions client: `POST {model, temperature, messages}`, answer
/// taken from the first choice's message content.
pub struct HttpChatProvider {
    agent: ureq::Agent,
}

impl HttpChatProvider {
    pub fn new(timeout_secs: f64) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs_f64(timeout_secs.max(0.001))))
            .build()
            .into();
        HttpChatProvider { agent }
    }
}

impl ChatProvider for HttpChatProvider {
    fn complete(&self, cfg: &ChatConfig, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let body = serde_json::to_vec(&Request {
            model: &cfg.model_id,
            temperature: cfg.temperature,
            max_tokens: cfg.max_tokens,
            messages,
        })?;
        let mut resp = self
            .agent
            .post(&cfg.endpoint)
            .header("Content-Type", "application/json")
            .send(&body[..])
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| LlmError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(LlmError::Transport(format!("status {status}: {text}")));
        }
        let parsed: Response = serde_json::from_str(&text).map_err(|e| LlmError::Protocol(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| LlmError::Protocol("response has no choices".into()))
    }
}
