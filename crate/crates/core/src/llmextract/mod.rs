//! Chat-model stages: cluster cards, seven-field extraction and label
//! normalization, all behind strict response parsing.

mod heuristic;
mod http;
mod normalize;
mod parse;
pub mod prompts;
mod transcript;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use heuristic::HeuristicResponder;
pub use http::HttpChatProvider;
pub use normalize::{normalize_labels, LabelSet, NormalizeConfig, NormalizedRecord, LABEL_NONE, LABEL_OTHER};
pub use parse::{parse_lines, ParseError};
pub use transcript::{prompt_hash, TranscriptCache, TranscriptMode, TranscriptProvider};

use prompts::{render, truncate_at_whitespace, EXCERPT_CHARS};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("chat transport: {0}")]
    Transport(String),
    #[error("malformed chat response: {0}")]
    Protocol(String),
    #[error("unparseable response after {attempts} attempt(s): {error}; raw response: {raw:?}")]
    Parse { error: ParseError, raw: String, attempts: u32 },
    #[error("document text is empty")]
    EmptyText,
    #[error("cluster labeling needs 1..=15 abstracts, got {0}")]
    AbstractCount(usize),
    #[error("prompt of {len} characters exceeds the context budget of {budget}")]
    ContextBudget { len: usize, budget: usize },
    #[error("no recorded transcript for prompt {hash}")]
    TranscriptMiss { hash: String },
    #[error("transcript file {path}: {message}")]
    Transcript { path: String, message: String },
    #[error("invalid chat config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub const LABELING_MODEL: &str = "LLaMA-3 8B";
pub const EXTRACTION_MODEL: &str = "Mistral-7B Instruct";
pub const MAX_ABSTRACTS: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatConfig {
    pub endpoint: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: usize,
    pub retries: u32,
    /// Upper bound on the first prompt, in characters.
    pub context_budget: usize,
    pub timeout_secs: f64,
}

impl Default for ChatConfig {
    fn default() -> Self {
        ChatConfig {
            endpoint: "http://127.0.0.1:8080/v1/chat/completions".into(),
            model_id: EXTRACTION_MODEL.into(),
            temperature: 0.1,
            max_tokens: 512,
            retries: 2,
            context_budget: 32_000,
            timeout_secs: 120.0,
        }
    }
}

impl ChatConfig {
    pub fn labeling() -> Self {
        ChatConfig { model_id: LABELING_MODEL.into(), ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature >= 0.0) {
            return Err(LlmError::InvalidConfig("temperature must be >= 0".into()));
        }
        if self.model_id.trim().is_empty() {
            return Err(LlmError::InvalidConfig("model_id is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: "assistant".into(), content: content.into() }
    }
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, cfg: &ChatConfig, messages: &[ChatMessage]) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterCard {
    pub cluster_id: usize,
    pub title: String,
    pub description: String,
    pub ai_summary: String,
    pub retry_count: u32,
}

pub const CARD_KEYS: [&str; 3] = ["Title", "Description", "AI"];

pub const EXTRACTION_KEYS: [&str; 7] = [
    "LCA stage",
    "LCIA method",
    "Application area",
    "AI/ML task",
    "AI/ML technology",
    "Impact metrics",
    "Claimed benefit",
];

/// Seven extracted fields; `None` is the model's literal "None".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionRecord {
    pub doc_id: String,
    pub lca_stage: Option<String>,
    pub lcia_method: Option<String>,
    pub application_area: Option<String>,
    pub ai_task: Option<String>,
    pub ai_technology: Option<String>,
    pub impact_metrics: Option<String>,
    pub claimed_benefit: Option<String>,
    pub retry_count: u32,
}

impl ExtractionRecord {
    pub fn from_values(doc_id: impl Into<String>, values: &[String], retry_count: u32) -> Self {
        let f = |i: usize| values.get(i).and_then(|v| absent_or(v));
        ExtractionRecord {
            doc_id: doc_id.into(),
            lca_stage: f(0),
            lcia_method: f(1),
            application_area: f(2),
            ai_task: f(3),
            ai_technology: f(4),
            impact_metrics: f(5),
            claimed_benefit: f(6),
            retry_count,
        }
    }

    pub fn fields(&self) -> [Option<&str>; 7] {
        [
            self.lca_stage.as_deref(),
            self.lcia_method.as_deref(),
            self.application_area.as_deref(),
            self.ai_task.as_deref(),
            self.ai_technology.as_deref(),
            self.impact_metrics.as_deref(),
            self.claimed_benefit.as_deref(),
        ]
    }
}

/// The model's "None" (any case, optional trailing period) is absence.
fn absent_or(v: &str) -> Option<String> {
    let t = v.trim().trim_end_matches('.');
    if t.eq_ignore_ascii_case("none") {
        None
    } else {
        Some(v.trim().to_string())
    }
}

/// Send `prompt`, parse `expected` keyed lines, and on a format violation
/// resend with a correction naming the problem, at most `cfg.retries` times.
/// Returns the values and the number of retries used.
pub fn ask_lines(
    provider: &dyn ChatProvider,
    cfg: &ChatConfig,
    prompt: String,
    keys: &[&str],
) -> Result<(Vec<String>, u32), LlmError> {
    let len = prompt.chars().count();
    if len > cfg.context_budget {
        return Err(LlmError::ContextBudget { len, budget: cfg.context_budget });
    }
    let expected = keys.len();
    let mut messages = vec![ChatMessage::user(prompt)];
    let mut attempt = 0;
    loop {
        let raw = provider.complete(cfg, &messages)?;
        match parse_lines(&raw, expected, Some(keys)) {
            Ok(values) => return Ok((values, attempt)),
            Err(error) if attempt >= cfg.retries => {
                return Err(LlmError::Parse { error, raw, attempts: attempt + 1 });
            }
            Err(error) => {
                log::debug!("retrying after format violation: {error}");
                let key_list = format!(" starting with {}", keys.iter().map(|k| format!("\"{k}:\"")).collect::<Vec<_>>().join(", "));
                let correction = render(
                    prompts::CORRECTION,
                    &[("problem", &error.to_string()), ("expected", &expected.to_string()), ("keys", &key_list)],
                );
                messages.push(ChatMessage::assistant(raw));
                messages.push(ChatMessage::user(correction));
                attempt += 1;
            }
        }
    }
}

/// Numbered abstracts, each shortened to an equal share of the budget left
/// by the template.
fn abstracts_block(abstracts: &[&str], budget: usize) -> String {
    let overhead = prompts::CLUSTER_LABEL.chars().count() + 16 * abstracts.len();
    let share = budget.saturating_sub(overhead) / abstracts.len().max(1);
    abstracts
        .iter()
        .enumerate()
        .map(|(i, a)| format!("[{}] {}", i + 1, truncate_at_whitespace(a.trim(), share)))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Ask for a three-line card (title, description, AI use) from the top
/// abstracts of a cluster.
pub fn label_cluster(
    provider: &dyn ChatProvider,
    cluster_id: usize,
    abstracts: &[&str],
    cfg: &ChatConfig,
) -> Result<ClusterCard, LlmError> {
    if abstracts.is_empty() || abstracts.len() > MAX_ABSTRACTS {
        return Err(LlmError::AbstractCount(abstracts.len()));
    }
    let prompt = render(
        prompts::CLUSTER_LABEL,
        &[("count", &abstracts.len().to_string()), ("abstracts", &abstracts_block(abstracts, cfg.context_budget))],
    );
    let (v, retry_count) = ask_lines(provider, cfg, prompt, &CARD_KEYS)?;
    Ok(ClusterCard {
        cluster_id,
        title: v[0].clone(),
        description: v[1].clone(),
        ai_summary: v[2].clone(),
        retry_count,
    })
}

pub fn extraction_prompt(fulltext: &str, lcia_methods: &[String]) -> String {
    let primer = render(prompts::LCA_PRIMER, &[("lcia_methods", &lcia_methods.join(", "))]);
    let excerpt = truncate_at_whitespace(fulltext.trim(), EXCERPT_CHARS);
    render(prompts::EXTRACT_FIELDS, &[("primer", primer.trim_end()), ("excerpt", excerpt)])
}

/// Seven-line extraction over the first 12,000 characters of a paper.
pub fn extract_fields(
    provider: &dyn ChatProvider,
    doc_id: &str,
    fulltext: &str,
    lcia_methods: &[String],
    cfg: &ChatConfig,
) -> Result<ExtractionRecord, LlmError> {
    if fulltext.trim().is_empty() {
        return Err(LlmError::EmptyText);
    }
    let (v, retries) = ask_lines(provider, cfg, extraction_prompt(fulltext, lcia_methods), &EXTRACTION_KEYS)?;
    Ok(ExtractionRecord::from_values(doc_id, &v, retries))
}

/// `extract_fields` over many documents on `workers` threads; output is
/// ordered by doc id.
pub fn extract_all(
    provider: &dyn ChatProvider,
    docs: &[(String, String)],
    lcia_methods: &[String],
    cfg: &ChatConfig,
    workers: usize,
) -> Result<Vec<ExtractionRecord>, LlmError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LlmError::InvalidConfig(e.to_string()))?;
    let mut out: Vec<ExtractionRecord> = pool.install(|| {
        docs.par_iter()
            .map(|(id, text)| extract_fields(provider, id, text, lcia_methods, cfg))
            .collect::<Result<_, _>>()
    })?;
    out.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(out)
}

/// `doc_id` then the seven fields; absent values are empty cells.
pub fn write_extraction_csv<W: Write>(records: &[ExtractionRecord], out: W) -> Result<(), LlmError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["doc_id"];
    header.extend(EXTRACTION_KEYS);
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.doc_id.as_str()];
        row.extend(r.fields().iter().map(|f| f.unwrap_or("")));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_normalized_csv<W: Write>(records: &[NormalizedRecord], out: W) -> Result<(), LlmError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["doc_id", "ai_label", "lca_stage_label", "lcia_label", "model_calls", "fallback"])?;
    for r in records {
        w.write_record([
            r.doc_id.clone(),
            r.ai_label.clone(),
            r.lca_stage_label.clone(),
            r.lcia_label.clone(),
            r.model_calls.to_string(),
            r.fallback.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
