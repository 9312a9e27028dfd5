//! Full-text retrieval: an open-access resolver first, then a publisher
//! full-text API for routed DOI prefixes. Every request outcome lands in a
//! retrieval ledger.

mod client;
mod run;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, Provider};

pub use client::{fetch, Fetched, ProviderClient, RateLimiter, ResponseCache};
pub use run::{harvest_all, read_ledger, write_ledger, HarvestReport, Harvester};

pub const DEFAULT_PUBLISHER_PREFIXES: &[&str] = &["10.1016"];
pub const DEFAULT_TOKEN_ENV: &str = "LITSCAPE_PUBLISHER_TOKEN";

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("http status {status}: {message}")]
    Http { status: u16, message: String },
    #[error("authentication rejected (status {0})")]
    Auth(u16),
    #[error("not entitled to full text")]
    Paywalled,
    #[error("not found")]
    NotFound,
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("unsupported payload: {0}")]
    Unsupported(String),
    #[error("no publisher token configured")]
    MissingToken,
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarvestError {
    /// Worth another try: network trouble, throttling, server faults.
    pub fn is_transient(&self) -> bool {
        match self {
            HarvestError::Transport(_) => true,
            HarvestError::Http { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }

    pub fn outcome(&self) -> Outcome {
        match self {
            HarvestError::Paywalled => Outcome::Paywalled,
            HarvestError::NotFound => Outcome::NotFound,
            _ => Outcome::HttpError,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    /// `http(s)://` endpoint, or `file://` directory of recorded responses.
    pub base_url: String,
    #[serde(skip_serializing)]
    pub auth_token: Option<String>,
    /// Environment variable consulted when `auth_token` is unset.
    pub token_env: Option<String>,
    /// Requests per second.
    pub rate_limit: f64,
    pub timeout_secs: f64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            base_url: String::new(),
            auth_token: None,
            token_env: None,
            rate_limit: 5.0,
            timeout_secs: 30.0,
        }
    }
}

impl ProviderConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        ProviderConfig { base_url: base_url.into(), ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), HarvestError> {
        if !(self.rate_limit > 0.0 && self.rate_limit.is_finite()) {
            return Err(HarvestError::InvalidConfig(format!("rate_limit must be positive, got {}", self.rate_limit)));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(HarvestError::InvalidConfig(format!("timeout must be positive, got {}", self.timeout_secs)));
        }
        if self.base_url.is_empty() {
            return Err(HarvestError::InvalidConfig("base_url is empty".into()));
        }
        Ok(())
    }

    pub fn token(&self) -> Option<String> {
        self.auth_token
            .clone()
            .or_else(|| self.token_env.as_deref().and_then(|v| std::env::var(v).ok()))
            .filter(|t| !t.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarvestConfig {
    pub open_access: ProviderConfig,
    pub publisher: ProviderConfig,
    pub publisher_prefixes: Vec<String>,
    /// Contact address sent to the open-access resolver.
    pub email: Option<String>,
    /// Total tries per request, including the first.
    pub attempts: u32,
    pub backoff_secs: f64,
    pub workers: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        HarvestConfig {
            open_access: ProviderConfig::new("https://api.unpaywall.org/v2"),
            publisher: ProviderConfig {
                token_env: Some(DEFAULT_TOKEN_ENV.into()),
                ..ProviderConfig::new("https://api.elsevier.com/content/article/doi")
            },
            publisher_prefixes: DEFAULT_PUBLISHER_PREFIXES.iter().map(|s| s.to_string()).collect(),
            email: None,
            attempts: 3,
            backoff_secs: 1.0,
            workers: 4,
            cache_dir: None,
        }
    }
}

impl HarvestConfig {
    pub fn validate(&self) -> Result<(), HarvestError> {
        self.open_access.validate()?;
        self.publisher.validate()?;
        if self.attempts == 0 {
            return Err(HarvestError::InvalidConfig("attempts must be at least 1".into()));
        }
        if !(self.backoff_secs >= 0.0) {
            return Err(HarvestError::InvalidConfig("backoff must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    Paywalled,
    NotFound,
    HttpError,
    NoDoi,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Ok => "ok",
            Outcome::Paywalled => "paywalled",
            Outcome::NotFound => "not_found",
            Outcome::HttpError => "http_error",
            Outcome::NoDoi => "no_doi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    PdfUrl,
    Xml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalAttempt {
    pub doc_id: String,
    pub provider: Provider,
    pub outcome: Outcome,
    pub payload_kind: Option<PayloadKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl RetrievalAttempt {
    pub fn ok(doc_id: &str, provider: Provider, kind: PayloadKind) -> Self {
        RetrievalAttempt { doc_id: doc_id.into(), provider, outcome: Outcome::Ok, payload_kind: Some(kind), detail: None }
    }

    pub fn failed(doc_id: &str, provider: Provider, err: &HarvestError) -> Self {
        RetrievalAttempt {
            doc_id: doc_id.into(),
            provider,
            outcome: err.outcome(),
            payload_kind: None,
            detail: Some(err.to_string()),
        }
    }

    pub fn no_doi(doc_id: &str) -> Self {
        RetrievalAttempt {
            doc_id: doc_id.into(),
            provider: Provider::OpenAccess,
            outcome: Outcome::NoDoi,
            payload_kind: None,
            detail: None,
        }
    }
}

/// Whether a DOI goes to the publisher API: its registrant prefix (the part
/// before the first `/`) is in `prefixes`.
pub fn route_publisher(doi: &str, prefixes: &[String]) -> bool {
    let doi = doi.trim();
    let Some((prefix, suffix)) = doi.split_once('/') else {
        return false;
    };
    !suffix.is_empty() && prefixes.iter().any(|p| p.eq_ignore_ascii_case(prefix))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routing() {
        let p: Vec<String> = vec!["10.1016".into()];
        assert!(route_publisher("10.1016/j.x.2020.1", &p));
        assert!(!route_publisher("10.1007/s00-1", &p));
        assert!(!route_publisher("", &p));
        assert!(!route_publisher("10.10160/x", &p));
        assert!(!route_publisher("10.1016", &p));
    }

    #[test]
    fn config_validation() {
        assert!(HarvestConfig::default().validate().is_ok());
        let mut c = ProviderConfig::new("http://x");
        c.rate_limit = 0.0;
        assert!(c.validate().is_err());
        c.rate_limit = 1.0;
        c.timeout_secs = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn tokens_never_serialize() {
        let mut c = ProviderConfig::new("http://x");
        c.auth_token = Some("secret".into());
        assert!(!serde_json::to_string(&c).unwrap().contains("secret"));
    }
}
