use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatConfig, ChatMessage, ChatProvider, LlmError};

#[derive(Serialize)]
struct HashInput<'a> {
    model: &'a str,
    temperature: f64,
    messages: &'a [ChatMessage],
}

/// SHA-256 over the model id, temperature and full message list.
pub fn prompt_hash(cfg: &ChatConfig, messages: &[ChatMessage]) -> String {
    let bytes = serde_json::to_vec(&HashInput { model: &cfg.model_id, temperature: cfg.temperature, messages })
        .expect("messages serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub model: String,
    pub response: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct TranscriptFile {
    entries: BTreeMap<String, TranscriptEntry>,
}

/// Recorded prompt-hash to response pairs, kept as one JSON file with keys
/// in sorted order.
pub struct TranscriptCache {
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<String, TranscriptEntry>>,
}

impl TranscriptCache {
    pub fn in_memory() -> Self {
        TranscriptCache { path: None, entries: Mutex::new(BTreeMap::new()) }
    }

    /// Load `path`; a missing file is an empty cache.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        let err = |m: String| LlmError::Transcript { path: path.display().to_string(), message: m };
        let entries = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str::<TranscriptFile>(&text).map_err(|e| err(e.to_string()))?.entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(err(e.to_string())),
        };
        Ok(TranscriptCache { path: Some(path), entries: Mutex::new(entries) })
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, hash: &str) -> Option<String> {
        self.entries.lock().unwrap().get(hash).map(|e| e.response.clone())
    }

    pub fn insert(&self, hash: String, model: &str, response: &str) {
        self.entries
            .lock()
            .unwrap()
            .insert(hash, TranscriptEntry { model: model.to_string(), response: response.to_string() });
    }

    /// Write the cache back to its file (no-op when in memory).
    pub fn save(&self) -> Result<(), LlmError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let err = |m: String| LlmError::Transcript { path: path.display().to_string(), message: m };
        let file = TranscriptFile { entries: self.entries.lock().unwrap().clone() };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| err(e.to_string()))?;
        }
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, text).map_err(|e| err(e.to_string()))?;
        std::fs::rename(&tmp, path).map_err(|e| err(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranscriptMode {
    /// Answer only from the cache; a miss is an error.
    Replay,
    /// Answer from the cache, asking the inner provider on a miss and
    /// storing its answer.
    Record,
}

pub struct TranscriptProvider<'a> {
    pub cache: &'a TranscriptCache,
    pub inner: Option<&'a dyn ChatProvider>,
    pub mode: TranscriptMode,
}

impl ChatProvider for TranscriptProvider<'_> {
    fn complete(&self, cfg: &ChatConfig, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let hash = prompt_hash(cfg, messages);
        if let Some(r) = self.cache.get(&hash) {
            return Ok(r);
        }
        match (self.mode, self.inner) {
            (TranscriptMode::Record, Some(inner)) => {
                let r = inner.complete(cfg, messages)?;
                self.cache.insert(hash, &cfg.model_id, &r);
                Ok(r)
            }
            _ => Err(LlmError::TranscriptMiss { hash }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;

    impl ChatProvider for Echo {
        fn complete(&self, _: &ChatConfig, m: &[ChatMessage]) -> Result<String, LlmError> {
            Ok(format!("echo {}", m[0].content))
        }
    }

    #[test]
    fn record_then_replay_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        let cfg = ChatConfig::default();
        let msgs = [ChatMessage::user("hello")];
        {
            let cache = TranscriptCache::open(&path).unwrap();
            let p = TranscriptProvider { cache: &cache, inner: Some(&Echo), mode: TranscriptMode::Record };
            assert_eq!(p.complete(&cfg, &msgs).unwrap(), "echo hello");
            cache.save().unwrap();
        }
        let cache = TranscriptCache::open(&path).unwrap();
        assert_eq!(cache.len(), 1);
        let p = TranscriptProvider { cache: &cache, inner: None, mode: TranscriptMode::Replay };
        assert_eq!(p.complete(&cfg, &msgs).unwrap(), "echo hello");
        assert!(matches!(p.complete(&cfg, &[ChatMessage::user("other")]), Err(LlmError::TranscriptMiss { .. })));
    }

    #[test]
    fn hash_depends_on_model_and_temperature() {
        let msgs = [ChatMessage::user("x")];
        let a = ChatConfig::default();
        let b = ChatConfig { temperature: 0.2, ..a.clone() };
        let c = ChatConfig { model_id: "other".into(), ..a.clone() };
        let h = prompt_hash(&a, &msgs);
        assert_eq!(h.len(), 64);
        assert_ne!(h, prompt_hash(&b, &msgs));
        assert_ne!(h, prompt_hash(&c, &msgs));
        assert_eq!(h, prompt_hash(&ChatConfig { endpoint: "elsewhere".into(), ..a }, &msgs));
    }
}
