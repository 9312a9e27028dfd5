use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineError, StageName};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(hash_bytes(&bytes))
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ran,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    pub input_hash: String,
    /// Output path relative to the run directory, to its sha256.
    pub outputs: BTreeMap<String, String>,
    pub started_ms: u64,
    pub finished_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub stages: Vec<StageRecord>,
    pub started_ms: u64,
    pub finished_ms: u64,
    /// False when a stage failed and later stages did not run.
    pub complete: bool,
}

impl RunManifest {
    pub fn new(config: serde_json::Value, seed: u64) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            stages: Vec::new(),
            started_ms: now_ms(),
            finished_ms: 0,
            complete: false,
        }
    }

    pub fn load(dir: &Path) -> Result<Option<Self>, PipelineError> {
        let p = dir.join(MANIFEST_FILE);
        match std::fs::read(&p) {
            Ok(b) => Ok(Some(serde_json::from_slice(&b)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(PipelineError::io(&p, e)),
        }
    }

    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        let p = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&p, text).map_err(|e| PipelineError::io(&p, e))
    }

    pub fn stage(&self, name: StageName) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == name.as_str())
    }

    /// Insert or replace a stage record, keeping pipeline order.
    pub fn upsert(&mut self, record: StageRecord) {
        self.stages.retain(|s| s.stage != record.stage);
        self.stages.push(record);
        let rank = |s: &StageRecord| StageName::ALL.iter().position(|n| n.as_str() == s.stage).unwrap_or(usize::MAX);
        self.stages.sort_by_key(rank);
    }

    /// Output path to hash over all stages.
    pub fn output_hashes(&self) -> BTreeMap<String, String> {
        self.stages.iter().flat_map(|s| s.outputs.clone()).collect()
    }
}

fn walk(dir: &Path, root: &Path, out: &mut BTreeSet<String>) -> Result<(), PipelineError> {
    for entry in std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))? {
        let entry = entry.map_err(|e| PipelineError::io(dir, e))?;
        let p = entry.path();
        if p.is_dir() {
            walk(&p, root, out)?;
        } else if let Ok(rel) = p.strip_prefix(root) {
            out.insert(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

/// Recompute every recorded output hash. Returns one message per problem:
/// a changed or missing output, or a file the manifest does not list.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, PipelineError> {
    let m = RunManifest::load(dir)?
        .ok_or_else(|| PipelineError::Config(format!("no {MANIFEST_FILE} in {}", dir.display())))?;
    let recorded = m.output_hashes();
    let mut problems = Vec::new();
    for (rel, want) in &recorded {
        let p = dir.join(rel);
        if !p.is_file() {
            problems.push(format!("{rel}: missing"));
        } else if &hash_file(&p)? != want {
            problems.push(format!("{rel}: hash mismatch"));
        }
    }
    let mut present = BTreeSet::new();
    walk(dir, dir, &mut present)?;
    for rel in present {
        if rel != MANIFEST_FILE && !recorded.contains_key(&rel) {
            problems.push(format!("{rel}: not in manifest"));
        }
    }
    Ok(problems)
}
