use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{HarvestError, ProviderConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fetched {
    pub status: u16,
    pub body: String,
}

fn io_err(path: &Path, source: std::io::Error) -> HarvestError {
    HarvestError::Io { path: path.display().to_string(), source }
}

/// GET over `http(s)://`, or a read of a recorded response under `file://`
/// (a missing file answers 404).
pub fn fetch(agent: &ureq::Agent, url: &str, headers: &[(&str, &str)]) -> Result<Fetched, HarvestError> {
    if let Some(path) = url.strip_prefix("file://") {
        let path = Path::new(path.split('?').next().unwrap_or(path));
        return match std::fs::read_to_string(path) {
            Ok(body) => Ok(Fetched { status: 200, body }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Fetched { status: 404, body: String::new() }),
            Err(e) => Err(io_err(path, e)),
        };
    }
    let mut req = agent.get(url);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let mut resp = req.call().map_err(|e| HarvestError::Transport(e.to_string()))?;
    let status = resp.status().as_u16();
    let body = resp
        .body_mut()
        .with_config()
        .limit(64 * 1024 * 1024)
        .read_to_string()
        .map_err(|e| HarvestError::Transport(e.to_string()))?;
    Ok(Fetched { status, body })
}

/// Hands out request slots spaced `1 / rate` seconds apart; callers sleep
/// until their slot, so concurrent workers share one budget.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(rate_per_sec: f64) -> Self {
        RateLimiter { interval: Duration::from_secs_f64(1.0 / rate_per_sec), next: Mutex::new(None) }
    }

    pub fn acquire(&self) {
        let now = Instant::now();
        let slot = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let slot = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(slot + self.interval);
            slot
        };
        if slot > now {
            std::thread::sleep(slot - now);
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    status: u16,
    body: String,
}

/// Final provider answers on disk, one JSON file per (route, key).
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ResponseCache { dir: dir.into() }
    }

    fn path(&self, route: &str, key: &str) -> PathBuf {
        let h = hex::encode(Sha256::digest(key.as_bytes()));
        self.dir.join(route).join(format!("{h}.json"))
    }

    pub fn get(&self, route: &str, key: &str) -> Result<Option<Fetched>, HarvestError> {
        let p = self.path(route, key);
        match std::fs::read(&p) {
            Ok(bytes) => {
                let e: CacheEntry = serde_json::from_slice(&bytes)?;
                Ok((e.key == key).then_some(Fetched { status: e.status, body: e.body }))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&p, e)),
        }
    }

    pub fn put(&self, route: &str, key: &str, f: &Fetched) -> Result<(), HarvestError> {
        let p = self.path(route, key);
        let dir = p.parent().expect("cache path has a parent");
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let tmp = p.with_extension(format!("tmp{}", std::process::id()));
        let entry = CacheEntry { key: key.into(), status: f.status, body: f.body.clone() };
        std::fs::write(&tmp, serde_json::to_vec(&entry)?).map_err(|e| io_err(&tmp, e))?;
        std::fs::rename(&tmp, &p).map_err(|e| io_err(&p, e))
    }
}

fn cacheable(status: u16) -> bool {
    matches!(status, 200 | 403 | 404)
}

/// One provider endpoint: rate limit, retries with exponential backoff and
/// an optional response cache.
#[derive(Debug)]
pub struct ProviderClient {
    pub cfg: ProviderConfig,
    route: &'static str,
    limiter: RateLimiter,
    agent: ureq::Agent,
    attempts: u32,
    backoff: Duration,
    cache: Option<ResponseCache>,
}

impl ProviderClient {
    pub fn new(route: &'static str, cfg: ProviderConfig, attempts: u32, backoff_secs: f64) -> Result<Self, HarvestError> {
        cfg.validate()?;
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs)))
            .build()
            .into();
        Ok(ProviderClient {
            route,
            limiter: RateLimiter::new(cfg.rate_limit),
            agent,
            attempts: attempts.max(1),
            backoff: Duration::from_secs_f64(backoff_secs),
            cache: None,
            cfg,
        })
    }

    pub fn with_cache(mut self, cache: Option<ResponseCache>) -> Self {
        self.cache = cache;
        self
    }

    pub fn get(&self, url: &str, headers: &[(&str, &str)], cache_key: &str) -> Result<Fetched, HarvestError> {
        if let Some(c) = &self.cache {
            if let Some(hit) = c.get(self.route, cache_key)? {
                return Ok(hit);
            }
        }
        let remote = !url.starts_with("file://");
        let mut delay = self.backoff;
        let mut tries = 0;
        let fetched = loop {
            tries += 1;
            if remote {
                self.limiter.acquire();
            }
            let r = fetch(&self.agent, url, headers).and_then(|f| {
                let transient = f.status == 429 || f.status >= 500;
                if transient {
                    Err(HarvestError::Http { status: f.status, message: f.body.chars().take(200).collect() })
                } else {
                    Ok(f)
                }
            });
            match r {
                Err(e) if e.is_transient() && tries < self.attempts => {
                    log::debug!("{} {url}: {e}; retrying in {delay:?}", self.route);
                    std::thread::sleep(delay);
                    delay *= 2;
                }
                other => break other?,
            }
        };
        if let Some(c) = &self.cache {
            if cacheable(fetched.status) {
                c.put(self.route, cache_key, &fetched)?;
            }
        }
        Ok(fetched)
    }
}
