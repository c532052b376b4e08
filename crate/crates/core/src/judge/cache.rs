use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use super::{sha256_hex, Judge, JudgeError, JudgeRequest, JudgeTranscript};

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache io at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt cache entry {hash}: {reason}")]
    Corrupt { hash: String, reason: String },
}

/// One JSON transcript file per request hash under a directory.
///
/// Reads may run concurrently; writes for the same key are serialized through
/// a per-key lock and land atomically via rename.
#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, CacheError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| CacheError::Io { path: dir.clone(), source })?;
        Ok(ResponseCache { dir, locks: Mutex::new(HashMap::new()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    fn key_lock(&self, hash: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table poisoned");
        locks.entry(hash.to_owned()).or_default().clone()
    }

    pub fn get(&self, hash: &str) -> Result<Option<JudgeTranscript>, CacheError> {
        let path = self.entry_path(hash);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(CacheError::Io { path, source }),
        };
        let corrupt = |reason: String| CacheError::Corrupt { hash: hash.to_owned(), reason };
        let t: JudgeTranscript = serde_json::from_slice(&bytes).map_err(|e| corrupt(e.to_string()))?;
        if t.request_hash != hash {
            return Err(corrupt(format!("stored request hash {}", t.request_hash)));
        }
        if sha256_hex(t.raw_response.as_bytes()) != t.response_digest {
            return Err(corrupt("response digest mismatch".into()));
        }
        Ok(Some(t))
    }

    pub fn put(&self, t: &JudgeTranscript) -> Result<(), CacheError> {
        let path = self.entry_path(&t.request_hash);
        let tmp = self.dir.join(format!(".{}.{}.tmp", t.request_hash, std::process::id()));
        let io = |source| CacheError::Io { path: path.clone(), source };
        let json = serde_json::to_vec_pretty(t).expect("transcript serializes");
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&json).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }

    pub fn evict(&self, hash: &str) -> Result<(), CacheError> {
        let path = self.entry_path(hash);
        match fs::remove_file(&path) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
            Err(source) => Err(CacheError::Io { path, source }),
        }
    }
}

/// Serves `req` from `cache` when possible, otherwise from `judge`, persisting
/// the transcript. Returns the raw answer and whether it came from the cache.
///
/// A corrupt entry is evicted and the request re-issued.
pub fn cached_complete(
    judge: &dyn Judge,
    cache: &ResponseCache,
    req: &JudgeRequest,
) -> Result<(String, bool), JudgeError> {
    let hash = judge.request_hash(req);
    let lock = cache.key_lock(&hash);
    let _guard = lock.lock().expect("cache key lock poisoned");
    match cache.get(&hash) {
        Ok(Some(t)) => return Ok((t.raw_response, true)),
        Ok(None) => {}
        Err(e @ CacheError::Corrupt { .. }) => {
            log::warn!("{e}; evicting and refetching");
            cache.evict(&hash)?;
        }
        Err(e) => return Err(e.into()),
    }
    let raw = judge.complete(req)?;
    cache.put(&JudgeTranscript::new(hash, req.tag.clone(), raw.clone()))?;
    Ok((raw, false))
}

/// A judge whose answers are memoized on disk.
pub struct CachedJudge<J> {
    inner: J,
    cache: Arc<ResponseCache>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<J: Judge> CachedJudge<J> {
    pub fn new(inner: J, cache: Arc<ResponseCache>) -> Self {
        CachedJudge { inner, cache, hits: AtomicUsize::new(0), misses: AtomicUsize::new(0) }
    }

    pub fn inner(&self) -> &J {
        &self.inner
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::SeqCst)
    }

    pub fn complete_traced(&self, req: &JudgeRequest) -> Result<(String, bool), JudgeError> {
        let out = cached_complete(&self.inner, &self.cache, req)?;
        if out.1 {
            self.hits.fetch_add(1, Ordering::SeqCst);
        } else {
            self.misses.fetch_add(1, Ordering::SeqCst);
        }
        Ok(out)
    }
}

impl<J: Judge> Judge for CachedJudge<J> {
    fn model_name(&self) -> &str {
        self.inner.model_name()
    }

    fn temperature(&self) -> f64 {
        self.inner.temperature()
    }

    fn complete(&self, req: &JudgeRequest) -> Result<String, JudgeError> {
        self.complete_traced(req).map(|(raw, _)| raw)
    }

    fn reject(&self, req: &JudgeRequest) {
        let hash = self.request_hash(req);
        if let Err(e) = self.cache.evict(&hash) {
            log::warn!("could not evict rejected entry {hash}: {e}");
        }
        self.inner.reject(req);
    }
}
