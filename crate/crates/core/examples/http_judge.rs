//! Calls an OpenAI-compatible chat-completions endpoint through the on-disk
//! response cache. The second identical request is served from the cache.
//!
//! SCOREPOINT_ENDPOINT=https://host/v1/chat/completions SCOREPOINT_MODEL=gpt-4o \
//! OPENAI_API_KEY=... cargo run --example http_judge
//!
//! Without `SCOREPOINT_ENDPOINT` the example prints the request it would send.

use std::sync::Arc;

use scorepoint::judge::{request_hash, CachedJudge, HttpJudge, ResponseCache};
use scorepoint::{Judge, JudgeConfig, JudgeRequest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = JudgeConfig { temperature: 0.0, max_retries: 2, ..JudgeConfig::default() };
    if let Ok(model) = std::env::var("SCOREPOINT_MODEL") {
        cfg.model_name = model;
    }
    let req = JudgeRequest::new(
        "rubric",
        "Rate the sentence 'The sky is green.' for factuality from 1 to 5. Answer with the number only.",
    )?;

    let Ok(endpoint) = std::env::var("SCOREPOINT_ENDPOINT") else {
        println!("no SCOREPOINT_ENDPOINT set; would POST to {}", cfg.endpoint_url);
        println!(
            "model {} at temperature {}, credential read from ${}",
            cfg.model_name, cfg.temperature, cfg.api_key_env
        );
        println!("request hash {}", request_hash(&cfg.model_name, cfg.temperature, &req.prompt_text));
        return Ok(());
    };
    cfg.endpoint_url = endpoint;

    let cache_dir = std::env::temp_dir().join("scorepoint-http-example");
    let judge = CachedJudge::new(HttpJudge::new(cfg)?, Arc::new(ResponseCache::open(&cache_dir)?));
    for attempt in 1..=2 {
        let answer = judge.complete(&req)?;
        println!("call {attempt}: {answer:?} (cache hits {}, misses {})", judge.hits(), judge.misses());
    }
    println!("cache directory: {}", cache_dir.display());
    Ok(())
}
