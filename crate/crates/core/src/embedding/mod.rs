//! Dense document vectors behind a provider abstraction.
//!
//! Vectors are stored as `f32` (on disk and as the canonical in-memory
//! value) and promoted to `f64` for all numerics, so a vector served from
//! the cache is bit-identical to the one first produced by the provider.

mod cache;
mod fallback;
mod http;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_key, EmbeddingCache};
pub use fallback::{fallback_embed, HashingProvider};
pub use http::HttpEmbeddingProvider;

pub const DEFAULT_DIM: usize = 384;
pub const DEFAULT_MODEL_ID: &str = "all-MiniLM-L6-v2";

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding provider request failed: {0}")]
    Http(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("text {index} is empty")]
    EmptyText { index: usize },
    #[error("expected {expected}-dimensional vectors, provider returned {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("provider returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("text has no tokens to embed")]
    NoTokens,
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("vectors differ in dimension ({0} vs {1})")]
    DimensionPair(usize, usize),
    #[error("cache i/o on {path}: {source}")]
    Cache {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("doc ids must be unique and aligned with texts: {0}")]
    Alignment(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub model_id: String,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    pub model_id: String,
    pub dim: usize,
    pub doc_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl EmbeddingMatrix {
    /// Build from raw rows, checking the shared-dimension and alignment invariants.
    pub fn new(model_id: impl Into<String>, doc_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, EmbeddingError> {
        if doc_ids.len() != rows.len() {
            return Err(EmbeddingError::Alignment(format!("{} ids for {} rows", doc_ids.len(), rows.len())));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = doc_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(EmbeddingError::Alignment(format!("duplicate id {dup}")));
        }
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(EmbeddingError::DimensionMismatch { expected: dim, got: bad.len() });
        }
        Ok(EmbeddingMatrix { model_id: model_id.into(), dim, doc_ids, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn vector(&self, i: usize) -> EmbeddingVector {
        EmbeddingVector {
            values: self.rows[i].clone(),
            model_id: self.model_id.clone(),
        }
    }

    /// Little-endian binary layout: `LSEM`, u32 rows, u32 dim, then row-major f32.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.len() * self.dim * 4);
        out.extend_from_slice(b"LSEM");
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for row in &self.rows {
            for &v in row {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(model_id: &str, doc_ids: Vec<String>, bytes: &[u8]) -> Result<Self, EmbeddingError> {
        let bad = |m: &str| EmbeddingError::Malformed(m.to_string());
        if bytes.len() < 12 || &bytes[..4] != b"LSEM" {
            return Err(bad("missing matrix header"));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if bytes.len() != 12 + n * dim * 4 {
            return Err(bad("matrix payload length mismatch"));
        }
        let rows = bytes[12..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect::<Vec<_>>()
            .chunks(dim.max(1))
            .take(n)
            .map(<[f64]>::to_vec)
            .collect();
        EmbeddingMatrix::new(model_id, doc_ids, rows)
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `1 - a.b / (|a| |b|)`, clamped into `[0, 2]`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::DimensionPair(a.len(), b.len()));
    }
    let (na, nb) = (l2_norm(a), l2_norm(b));
    if na == 0.0 || nb == 0.0 || !na.is_finite() || !nb.is_finite() {
        return Err(EmbeddingError::ZeroNorm);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((1.0 - dot / (na * nb)).clamp(0.0, 2.0))
}

/// Something that turns texts into raw vectors.
pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, EmbeddingError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    /// `"hashing"` for the offline provider, `"http"` for a remote endpoint.
    pub provider: String,
    pub model_id: String,
    pub dim: usize,
    pub endpoint: Option<String>,
    pub batch_size: usize,
    pub workers: usize,
    pub normalize: bool,
    /// Prepend the title to the abstract before embedding.
    pub include_title: bool,
    pub timeout_secs: f64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            provider: "hashing".into(),
            model_id: DEFAULT_MODEL_ID.into(),
            dim: DEFAULT_DIM,
            endpoint: None,
            batch_size: 32,
            workers: 2,
            normalize: true,
            include_title: false,
            timeout_secs: 60.0,
        }
    }
}

/// Batching, caching front end over a provider.
pub struct Embedder {
    provider: Box<dyn EmbeddingProvider>,
    cache: EmbeddingCache,
    dim: usize,
    batch_size: usize,
    workers: usize,
    normalize: bool,
}

impl Embedder {
    pub fn new(provider: Box<dyn EmbeddingProvider>, cache_dir: Option<PathBuf>, dim: usize) -> Self {
        Embedder {
            provider,
            cache: EmbeddingCache::new(cache_dir),
            dim,
            batch_size: 32,
            workers: 1,
            normalize: true,
        }
    }

    pub fn from_config(cfg: &EmbeddingConfig, cache_dir: Option<PathBuf>, seed: u64) -> Result<Self, EmbeddingError> {
        let provider: Box<dyn EmbeddingProvider> = match cfg.provider.as_str() {
            "http" => {
                let endpoint = cfg
                    .endpoint
                    .clone()
                    .ok_or_else(|| EmbeddingError::Http("http provider needs an endpoint".into()))?;
                Box::new(HttpEmbeddingProvider::new(endpoint, cfg.model_id.clone(), cfg.timeout_secs))
            }
            _ => Box::new(HashingProvider::new(cfg.dim, seed)),
        };
        Ok(Embedder::new(provider, cache_dir, cfg.dim)
            .with_batch_size(cfg.batch_size)
            .with_workers(cfg.workers)
            .with_normalize(cfg.normalize))
    }

    pub fn with_batch_size(mut self, n: usize) -> Self {
        self.batch_size = n.max(1);
        self
    }

    pub fn with_workers(mut self, n: usize) -> Self {
        self.workers = n.max(1);
        self
    }

    pub fn with_normalize(mut self, on: bool) -> Self {
        self.normalize = on;
        self
    }

    pub fn model_id(&self) -> &str {
        self.provider.model_id()
    }

    pub fn clear_memory(&self) {
        self.cache.clear_memory();
    }

    /// Embed `texts` in order; every text must be non-empty. Cached vectors
    /// are reused and only misses reach the provider.
    pub fn embed_batch(&self, doc_ids: &[String], texts: &[String]) -> Result<EmbeddingMatrix, EmbeddingError> {
        if doc_ids.len() != texts.len() {
            return Err(EmbeddingError::Alignment(format!("{} ids for {} texts", doc_ids.len(), texts.len())));
        }
        if let Some(index) = texts.iter().position(|t| t.trim().is_empty()) {
            return Err(EmbeddingError::EmptyText { index });
        }
        let model = self.provider.model_id().to_string();
        let keys: Vec<String> = texts
            .iter()
            .map(|t| cache_key(&model, self.dim, self.normalize, t))
            .collect();

        let mut rows: Vec<Option<Vec<f32>>> = keys.iter().map(|k| self.cache.get(k)).collect::<Result<_, _>>()?;
        let misses: Vec<usize> = (0..texts.len()).filter(|&i| rows[i].is_none()).collect();

        let batches: Vec<&[usize]> = misses.chunks(self.batch_size).collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| EmbeddingError::Http(e.to_string()))?;
        let fetched: Vec<Vec<Vec<f32>>> = pool.install(|| {
            batches
                .par_iter()
                .map(|batch| {
                    let slice: Vec<&str> = batch.iter().map(|&i| texts[i].as_str()).collect();
                    let vecs = self.provider.embed(&slice)?;
                    if vecs.len() != slice.len() {
                        return Err(EmbeddingError::CountMismatch { expected: slice.len(), got: vecs.len() });
                    }
                    vecs.into_iter().map(|v| self.finish(v)).collect()
                })
                .collect::<Result<_, _>>()
        })?;

        for (batch, vecs) in batches.iter().zip(fetched) {
            for (&i, v) in batch.iter().zip(vecs) {
                self.cache.put(&keys[i], &v)?;
                rows[i] = Some(v);
            }
        }
        let rows = rows
            .into_iter()
            .map(|r| r.expect("every row filled").into_iter().map(f64::from).collect())
            .collect();
        EmbeddingMatrix::new(model, doc_ids.to_vec(), rows)
    }

    fn finish(&self, v: Vec<f32>) -> Result<Vec<f32>, EmbeddingError> {
        if v.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        if !self.normalize {
            return Ok(v);
        }
        let wide: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        let n = l2_norm(&wide);
        if n == 0.0 || !n.is_finite() {
            return Err(EmbeddingError::ZeroNorm);
        }
        Ok(wide.iter().map(|x| (x / n) as f32).collect())
    }
}
