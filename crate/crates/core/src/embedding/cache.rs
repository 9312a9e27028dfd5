use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::EmbeddingError;

/// Content key for a vector: model, dimension, normalization flag and text.
pub fn cache_key(model_id: &str, dim: usize, normalized: bool, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    h.update([0u8]);
    h.update((dim as u64).to_le_bytes());
    h.update([normalized as u8]);
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

/// Two-level vector cache: an in-memory map in front of a directory of
/// `<key>.f32` files (little-endian `f32`s, no header).
pub struct EmbeddingCache {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Vec<f32>>>,
    write_lock: Mutex<()>,
}

impl EmbeddingCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        EmbeddingCache {
            dir,
            memory: Mutex::new(HashMap::new()),
            write_lock: Mutex::new(()),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.f32")))
    }

    pub fn get(&self, key: &str) -> Result<Option<Vec<f32>>, EmbeddingError> {
        if let Some(v) = self.memory.lock().unwrap().get(key) {
            return Ok(Some(v.clone()));
        }
        let Some(path) = self.path(key) else {
            return Ok(None);
        };
        match std::fs::read(&path) {
            Ok(bytes) if bytes.len() % 4 == 0 => {
                let v: Vec<f32> = bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                self.memory.lock().unwrap().insert(key.to_string(), v.clone());
                Ok(Some(v))
            }
            // truncated file: treat as a miss and overwrite later
            Ok(_) => Ok(None),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(EmbeddingError::Cache { path: path.display().to_string(), source: e }),
        }
    }

    pub fn put(&self, key: &str, v: &[f32]) -> Result<(), EmbeddingError> {
        self.memory.lock().unwrap().insert(key.to_string(), v.to_vec());
        if let (Some(dir), Some(path)) = (&self.dir, self.path(key)) {
            let _guard = self.write_lock.lock().unwrap();
            let io = |e| EmbeddingError::Cache { path: path.display().to_string(), source: e };
            std::fs::create_dir_all(dir).map_err(io)?;
            let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
            let tmp = path.with_extension("tmp");
            std::fs::write(&tmp, bytes).map_err(io)?;
            std::fs::rename(&tmp, &path).map_err(io)?;
        }
        Ok(())
    }

    pub fn clear_memory(&self) {
        self.memory.lock().unwrap().clear();
    }
}
