//! Judge backends.
//!
//! Every LLM call in the crate goes through the [`Judge`] trait. Three
//! implementations ship with the crate:
//!
//! * [`HttpJudge`]: an OpenAI-compatible chat-completions client with
//!   exponential-backoff retries on transport and 5xx failures.
//! * [`CachedJudge`]: wraps any judge with a persistent on-disk response cache
//!   keyed by [`request_hash`].
//! * [`MockJudge`]: deterministic offline judge, either scripted from fixtures
//!   or synthesizing grammar-valid answers from the prompt itself.
//!
//! Transport retries live here. Retries for well-formed answers that fail a
//! downstream grammar live in [`with_parse_retries`], called by the scoring
//! modules.

mod cache;
mod http;
mod mock;

use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::{cached_complete, CacheError, CachedJudge, ResponseCache};
pub use http::HttpJudge;
pub use mock::{MockBehavior, MockJudge};

/// Semantic tags attached to judge requests.
pub mod tags {
    pub const POINTS: &str = "points";
    pub const WPA: &str = "wpa";
    pub const PCP: &str = "pcp";
    pub const COARSE3: &str = "coarse3";
    pub const RANK: &str = "rank";
    pub const RUBRIC: &str = "rubric";
    pub const PROMPT_OPTIM: &str = "prompt_optim";
    pub const ERROR_TYPE: &str = "error_type";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    /// Per-request timeout in seconds.
    pub timeout_secs: f64,
    /// Name of the environment variable holding the API key. The key itself is
    /// never stored.
    pub api_key_env: String,
    pub max_tokens: Option<u32>,
    pub system_prompt: Option<String>,
    /// Bound on concurrent judge calls.
    pub workers: usize,
    /// First backoff delay in milliseconds; doubled on each retry.
    pub backoff_base_ms: u64,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig {
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o".into(),
            temperature: 0.5,
            max_retries: 3,
            timeout_secs: 120.0,
            api_key_env: "OPENAI_API_KEY".into(),
            max_tokens: None,
            system_prompt: None,
            workers: 4,
            backoff_base_ms: 500,
        }
    }
}

impl JudgeConfig {
    pub fn validate(&self) -> Result<(), JudgeError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(JudgeError::Config(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if self.workers == 0 {
            return Err(JudgeError::Config("workers must be at least 1".into()));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(JudgeError::Config("timeout must be positive".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub prompt_text: String,
    pub tag: String,
}

impl JudgeRequest {
    pub fn new(tag: impl Into<String>, prompt_text: impl Into<String>) -> Result<Self, JudgeError> {
        let prompt_text = prompt_text.into();
        if prompt_text.trim().is_empty() {
            return Err(JudgeError::InvalidRequest("prompt_text empty".into()));
        }
        Ok(JudgeRequest { prompt_text, tag: tag.into() })
    }
}

/// A persisted judge exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeTranscript {
    pub request_hash: String,
    pub tag: String,
    pub raw_response: String,
    /// SHA-256 of `raw_response`, checked on every cache read.
    pub response_digest: String,
    pub timestamp: DateTime<Utc>,
}

impl JudgeTranscript {
    pub fn new(request_hash: String, tag: String, raw_response: String) -> Self {
        let response_digest = sha256_hex(raw_response.as_bytes());
        JudgeTranscript { request_hash, tag, raw_response, response_digest, timestamp: Utc::now() }
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash over model name, temperature and prompt text. The endpoint URL
/// is deliberately excluded so caches survive a proxy change.
pub fn request_hash(model_name: &str, temperature: f64, prompt_text: &str) -> String {
    let mut h = Sha256::new();
    for part in [model_name.as_bytes(), format!("{temperature:?}").as_bytes(), prompt_text.as_bytes()] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("judge returned HTTP {status}: {body_excerpt}")]
    Status { status: u16, body_excerpt: String },
    #[error("malformed judge envelope: {0}")]
    Protocol(String),
    #[error("no fixture for tag {tag:?} and hash {hash}")]
    FixtureMissing { tag: String, hash: String },
    #[error("cache: {0}")]
    Cache(#[from] CacheError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid judge configuration: {0}")]
    Config(String),
}

pub trait Judge: Send + Sync {
    fn model_name(&self) -> &str;
    fn temperature(&self) -> f64;
    fn complete(&self, req: &JudgeRequest) -> Result<String, JudgeError>;

    /// Called when the answer to `req` failed downstream parsing, before the
    /// request is re-issued. Caching layers evict the entry here.
    fn reject(&self, _req: &JudgeRequest) {}

    fn request_hash(&self, req: &JudgeRequest) -> String {
        request_hash(self.model_name(), self.temperature(), &req.prompt_text)
    }
}

impl<J: Judge + ?Sized> Judge for &J {
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn temperature(&self) -> f64 {
        (**self).temperature()
    }
    fn complete(&self, req: &JudgeRequest) -> Result<String, JudgeError> {
        (**self).complete(req)
    }
    fn reject(&self, req: &JudgeRequest) {
        (**self).reject(req)
    }
}

impl<J: Judge + ?Sized> Judge for Box<J> {
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn temperature(&self) -> f64 {
        (**self).temperature()
    }
    fn complete(&self, req: &JudgeRequest) -> Result<String, JudgeError> {
        (**self).complete(req)
    }
    fn reject(&self, req: &JudgeRequest) {
        (**self).reject(req)
    }
}

impl<J: Judge + ?Sized> Judge for Arc<J> {
    fn model_name(&self) -> &str {
        (**self).model_name()
    }
    fn temperature(&self) -> f64 {
        (**self).temperature()
    }
    fn complete(&self, req: &JudgeRequest) -> Result<String, JudgeError> {
        (**self).complete(req)
    }
    fn reject(&self, req: &JudgeRequest) {
        (**self).reject(req)
    }
}

/// Outcome of a judge call whose answer must pass a grammar.
#[derive(Debug, Error)]
pub enum RetryError<E: std::error::Error + 'static> {
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error("judge output rejected after {attempts} attempt(s): {last_error}")]
    Exhausted { attempts: u32, last_error: E, last_raw: String },
}

/// Calls the judge and parses its answer, re-issuing the request up to
/// `parse_retries` extra times while the answer fails `parse`.
pub fn with_parse_retries<T, E, F>(
    judge: &dyn Judge,
    req: &JudgeRequest,
    parse_retries: u32,
    parse: F,
) -> Result<T, RetryError<E>>
where
    E: std::error::Error + 'static,
    F: Fn(&str) -> Result<T, E>,
{
    let mut attempt = 0;
    loop {
        attempt += 1;
        let raw = judge.complete(req)?;
        match parse(&raw) {
            Ok(v) => return Ok(v),
            Err(e) => {
                log::debug!("tag {} attempt {attempt}: rejected output: {e}", req.tag);
                judge.reject(req);
                if attempt > parse_retries {
                    return Err(RetryError::Exhausted { attempts: attempt, last_error: e, last_raw: raw });
                }
            }
        }
    }
}

/// Maps `f` over `items` on at most `workers` threads, preserving order.
pub fn bounded_map<T, R, F>(workers: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().expect("thread pool");
    pool.install(|| items.par_iter().map(&f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn hash_depends_on_model_temperature_prompt_only() {
        let a = request_hash("gpt-4o", 0.5, "p");
        assert_eq!(a, request_hash("gpt-4o", 0.5, "p"));
        assert_ne!(a, request_hash("gpt-4o", 0.0, "p"));
        assert_ne!(a, request_hash("gpt-4", 0.5, "p"));
        assert_ne!(a, request_hash("gpt-4o", 0.5, "q"));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn empty_prompt_rejected() {
        assert!(JudgeRequest::new("wpa", "  \n").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(JudgeConfig::default().validate().is_ok());
        let bad = JudgeConfig { temperature: -0.1, ..JudgeConfig::default() };
        assert!(bad.validate().is_err());
        let toml = "model_name = \"m\"\ntemperature = 0.0\n";
        let cfg: JudgeConfig = toml::from_str(toml).unwrap();
        assert_eq!(cfg.max_retries, 3);
        assert_eq!(cfg.temperature, 0.0);
    }

    struct Flaky {
        calls: AtomicUsize,
        rejected: AtomicUsize,
    }

    impl Judge for Flaky {
        fn model_name(&self) -> &str {
            "flaky"
        }
        fn temperature(&self) -> f64 {
            0.0
        }
        fn complete(&self, _req: &JudgeRequest) -> Result<String, JudgeError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(if n == 0 { "garbage".into() } else { "42".into() })
        }
        fn reject(&self, _req: &JudgeRequest) {
            self.rejected.fetch_add(1, Ordering::SeqCst);
        }
    }

    #[test]
    fn parse_retries_reissue_and_reject() {
        let j = Flaky { calls: AtomicUsize::new(0), rejected: AtomicUsize::new(0) };
        let req = JudgeRequest::new("t", "p").unwrap();
        let v: u32 = with_parse_retries(&j, &req, 1, |s| s.parse::<u32>()).unwrap();
        assert_eq!(v, 42);
        assert_eq!(j.calls.load(Ordering::SeqCst), 2);
        assert_eq!(j.rejected.load(Ordering::SeqCst), 1);

        let j = Flaky { calls: AtomicUsize::new(0), rejected: AtomicUsize::new(0) };
        let err = with_parse_retries(&j, &req, 0, |s| s.parse::<u32>()).unwrap_err();
        match err {
            RetryError::Exhausted { attempts, last_raw, .. } => {
                assert_eq!(attempts, 1);
                assert_eq!(last_raw, "garbage");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bounded_map_preserves_order() {
        let items: Vec<u32> = (0..100).collect();
        let out = bounded_map(4, &items, |x| x * 2);
        assert_eq!(out, items.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}
