use std::time::Duration;

use serde_json::{json, Value};

use super::{Judge, JudgeConfig, JudgeError, JudgeRequest};

const BODY_EXCERPT: usize = 300;
const MAX_BACKOFF: Duration = Duration::from_secs(30);

/// OpenAI-compatible chat-completions client.
///
/// Sends one user message carrying the whole prompt (preceded by a system
/// message only when configured) and reads `choices[0].message.content`.
pub struct HttpJudge {
    cfg: JudgeConfig,
    agent: ureq::Agent,
}

impl HttpJudge {
    pub fn new(cfg: JudgeConfig) -> Result<Self, JudgeError> {
        cfg.validate()?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpJudge { cfg, agent })
    }

    pub fn config(&self) -> &JudgeConfig {
        &self.cfg
    }

    fn body(&self, prompt: &str) -> Value {
        let mut messages = Vec::new();
        if let Some(system) = &self.cfg.system_prompt {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": prompt}));
        let mut body = json!({
            "model": self.cfg.model_name,
            "temperature": self.cfg.temperature,
            "messages": messages,
        });
        if let Some(max) = self.cfg.max_tokens {
            body["max_tokens"] = json!(max);
        }
        body
    }

    fn backoff(&self, retry: u32) -> Duration {
        let ms = self.cfg.backoff_base_ms.saturating_mul(1u64 << retry.min(20));
        Duration::from_millis(ms).min(MAX_BACKOFF)
    }

    fn send_once(&self, body: &Value) -> Result<String, Attempt> {
        let mut request = self.agent.post(&self.cfg.endpoint_url);
        if let Ok(key) = std::env::var(&self.cfg.api_key_env) {
            if !key.is_empty() {
                request = request.header("Authorization", format!("Bearer {key}"));
            }
        }
        let mut response = request.send_json(body).map_err(|e| Attempt::Transient(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| Attempt::Transient(e.to_string()))?;
        if status >= 500 {
            return Err(Attempt::Server(status, excerpt(&text)));
        }
        if !(200..300).contains(&status) {
            return Err(Attempt::Fatal(JudgeError::Status { status, body_excerpt: excerpt(&text) }));
        }
        extract_content(&text).map_err(Attempt::Fatal)
    }
}

enum Attempt {
    Transient(String),
    Server(u16, String),
    Fatal(JudgeError),
}

fn excerpt(s: &str) -> String {
    s.chars().take(BODY_EXCERPT).collect()
}

/// Reads `choices[0].message.content` from a chat-completions response body.
pub(crate) fn extract_content(body: &str) -> Result<String, JudgeError> {
    let v: Value = serde_json::from_str(body).map_err(|e| JudgeError::Protocol(format!("body is not JSON: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| JudgeError::Protocol(format!("no choices[0].message.content in {}", excerpt(body))))
}

impl Judge for HttpJudge {
    fn model_name(&self) -> &str {
        &self.cfg.model_name
    }

    fn temperature(&self) -> f64 {
        self.cfg.temperature
    }

    fn complete(&self, req: &JudgeRequest) -> Result<String, JudgeError> {
        let body = self.body(&req.prompt_text);
        let mut attempts = 0;
        loop {
            attempts += 1;
            let failure = match self.send_once(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Transient(msg)) => JudgeError::Transport { attempts, message: msg },
                Err(Attempt::Server(status, body_excerpt)) => JudgeError::Status { status, body_excerpt },
            };
            if attempts > self.cfg.max_retries {
                return Err(failure);
            }
            let delay = self.backoff(attempts - 1);
            log::warn!("judge call for tag {} failed ({failure}); retrying in {delay:?}", req.tag);
            std::thread::sleep(delay);
        }
    }
}
