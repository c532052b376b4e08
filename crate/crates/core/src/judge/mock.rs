use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Deserialize;
use serde_json::json;

use super::{request_hash, tags, Judge, JudgeError, JudgeRequest};
use crate::metrics::tokenize;
use crate::rng::stable_hash;

/// How a [`MockJudge`] produces answers.
#[derive(Debug, Clone)]
pub enum MockBehavior {
    /// Answers are synthesized from the prompt: points from the reference's
    /// sentences, alignment and ratings from token overlap, rankings from
    /// reference coverage. Every answer is valid under the crate's grammars.
    EchoFixture,
    /// Answers are looked up in a fixture table keyed by `"<tag>:<hash>"`,
    /// with `"<tag>:*"` as a per-tag fallback. A key may map to a sequence of
    /// answers; the n-th call for the same request gets the n-th answer and the
    /// last answer repeats.
    Scripted(BTreeMap<String, Vec<String>>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FixtureValue {
    One(String),
    Many(Vec<String>),
}

/// Deterministic offline judge.
pub struct MockJudge {
    seed: u64,
    behavior: MockBehavior,
    model_name: String,
    temperature: f64,
    calls: AtomicUsize,
    cursors: Mutex<HashMap<String, usize>>,
    transcript: Mutex<Vec<(String, String)>>,
}

impl MockJudge {
    pub fn new(seed: u64, behavior: MockBehavior) -> Self {
        MockJudge {
            seed,
            behavior,
            model_name: "mock".into(),
            temperature: 0.0,
            calls: AtomicUsize::new(0),
            cursors: Mutex::new(HashMap::new()),
            transcript: Mutex::new(Vec::new()),
        }
    }

    pub fn echo(seed: u64) -> Self {
        MockJudge::new(seed, MockBehavior::EchoFixture)
    }

    pub fn scripted<K: Into<String>, V: Into<String>>(seed: u64, fixtures: impl IntoIterator<Item = (K, V)>) -> Self {
        let table = fixtures.into_iter().map(|(k, v)| (k.into(), vec![v.into()])).collect();
        MockJudge::new(seed, MockBehavior::Scripted(table))
    }

    pub fn scripted_sequences(seed: u64, fixtures: BTreeMap<String, Vec<String>>) -> Self {
        MockJudge::new(seed, MockBehavior::Scripted(fixtures))
    }

    /// Loads a fixture table from JSON: `{"wpa:*": "...", "points:<hash>": ["...", "..."]}`.
    pub fn from_fixture_file(seed: u64, path: impl AsRef<Path>) -> Result<Self, JudgeError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| JudgeError::Config(format!("cannot read fixtures {}: {e}", path.display())))?;
        let raw: BTreeMap<String, FixtureValue> = serde_json::from_str(&text)
            .map_err(|e| JudgeError::Config(format!("bad fixture file {}: {e}", path.display())))?;
        let table = raw
            .into_iter()
            .map(|(k, v)| match v {
                FixtureValue::One(s) => (k, vec![s]),
                FixtureValue::Many(v) => (k, v),
            })
            .collect();
        Ok(MockJudge::new(seed, MockBehavior::Scripted(table)))
    }

    pub fn with_model_name(mut self, name: impl Into<String>) -> Self {
        self.model_name = name.into();
        self
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// `(request_hash, answer)` pairs in call order.
    pub fn transcript(&self) -> Vec<(String, String)> {
        self.transcript.lock().expect("transcript poisoned").clone()
    }

    fn scripted_answer(
        &self,
        table: &BTreeMap<String, Vec<String>>,
        req: &JudgeRequest,
        hash: &str,
    ) -> Result<String, JudgeError> {
        let exact = format!("{}:{}", req.tag, hash);
        let answers = table
            .get(&exact)
            .or_else(|| table.get(&format!("{}:*", req.tag)))
            .filter(|a| !a.is_empty())
            .ok_or_else(|| JudgeError::FixtureMissing { tag: req.tag.clone(), hash: hash.to_owned() })?;
        let mut cursors = self.cursors.lock().expect("cursor table poisoned");
        let n = cursors.entry(exact).or_insert(0);
        let answer = answers[(*n).min(answers.len() - 1)].clone();
        *n += 1;
        Ok(answer)
    }
}

impl Judge for MockJudge {
    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn complete(&self, req: &JudgeRequest) -> Result<String, JudgeError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let hash = request_hash(&self.model_name, self.temperature, &req.prompt_text);
        let answer = match &self.behavior {
            MockBehavior::Scripted(table) => self.scripted_answer(table, req, &hash)?,
            MockBehavior::EchoFixture => synth::answer(self.seed, req)
                .ok_or_else(|| JudgeError::FixtureMissing { tag: req.tag.clone(), hash: hash.clone() })?,
        };
        self.transcript.lock().expect("transcript poisoned").push((hash, answer.clone()));
        Ok(answer)
    }
}

/// Prompt-driven answer synthesis. Relies on the `[Header]` input sections of
/// the shipped templates.
mod synth {
    use super::*;

    const HEADERS: [&str; 10] = [
        "[Question]",
        "[Reference answer]",
        "[Scoring points]",
        "[Generated Answer]",
        "[Context]",
        "[Responses]",
        "[Base prompt]",
        "[Unexpected points]",
        "[Corrected points]",
        "## Input:",
    ];

    /// Content under the last exact `header` line, up to the next header line.
    pub(super) fn section<'a>(prompt: &'a str, header: &str) -> Option<String> {
        let lines: Vec<&'a str> = prompt.lines().collect();
        let start = lines.iter().rposition(|l| l.trim() == header)? + 1;
        let end = lines[start..].iter().position(|l| HEADERS.contains(&l.trim())).map_or(lines.len(), |p| start + p);
        Some(lines[start..end].join("\n").trim().to_owned())
    }

    fn content_tokens(text: &str) -> Vec<String> {
        tokenize(text).into_iter().filter(|t| t.chars().count() > 2).collect()
    }

    /// Share of `target`'s content tokens present in `source`.
    fn coverage(target: &str, source: &str) -> f64 {
        let target = content_tokens(target);
        if target.is_empty() {
            return 0.0;
        }
        let source: std::collections::HashSet<String> = content_tokens(source).into_iter().collect();
        target.iter().filter(|t| source.contains(*t)).count() as f64 / target.len() as f64
    }

    fn sentences(text: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = String::new();
        let chars: Vec<char> = text.chars().collect();
        for (i, &c) in chars.iter().enumerate() {
            if c == '\n' {
                push_sentence(&mut out, &mut cur);
                continue;
            }
            cur.push(c);
            let boundary = matches!(c, '.' | '!' | '?') && chars.get(i + 1).is_none_or(|n| n.is_whitespace());
            if boundary {
                push_sentence(&mut out, &mut cur);
            }
        }
        push_sentence(&mut out, &mut cur);
        out
    }

    fn push_sentence(out: &mut Vec<String>, cur: &mut String) {
        let s: String = cur.chars().filter(|c| !matches!(c, '[' | ']' | '(' | ')')).collect();
        let s = s.trim().trim_start_matches(['-', '*']).trim().to_owned();
        if !content_tokens(&s).is_empty() && !out.contains(&s) {
            out.push(s);
        }
        cur.clear();
    }

    fn prompt_points(section: &str) -> Vec<(u32, String)> {
        section
            .lines()
            .filter_map(|l| {
                let (idx, rest) = l.trim().split_once(". ")?;
                let idx: u32 = idx.parse().ok()?;
                let text = rest.rsplit_once(" (").map_or(rest, |(t, _)| t);
                Some((idx, text.to_owned()))
            })
            .collect()
    }

    fn points(seed: u64, prompt: &str) -> Option<String> {
        let reference = section(prompt, "[Reference answer]")?;
        let out: String = sentences(&reference)
            .into_iter()
            .take(8)
            .enumerate()
            .map(|(i, s)| {
                let w = if i == 0 { 3 } else { stable_hash(&[&seed.to_string(), &s]) % 3 + 1 };
                format!("- [[{s}]] | (({w}))\n")
            })
            .collect();
        (!out.is_empty()).then_some(out)
    }

    fn wpa(seed: u64, prompt: &str) -> Option<String> {
        let answer = section(prompt, "[Generated Answer]")?;
        let mut scores = serde_json::Map::new();
        for (idx, text) in prompt_points(&section(prompt, "[Scoring points]")?) {
            let cov = coverage(&text, &answer);
            let h = stable_hash(&[&seed.to_string(), &text, &answer]);
            let (m, explanation) = if cov >= 0.75 {
                (json!(1), "The answer fully covers this scoring point.")
            } else if cov >= 0.35 {
                if h.is_multiple_of(5) {
                    (json!(0.5), "The answer mentions this point but states an incorrect detail.")
                } else {
                    (json!(0.5), "The answer only partially and indirectly addresses this point.")
                }
            } else if h.is_multiple_of(4) {
                (json!(0), "The answer discusses unrelated material rather than this point.")
            } else {
                (json!(0), "The answer omits this scoring point entirely.")
            };
            scores.insert(idx.to_string(), json!({"match_scores": m, "explanation": explanation}));
        }
        Some(serde_json::to_string_pretty(&json!({ "point-wise scores": scores })).expect("json"))
    }

    fn pcp(seed: u64, prompt: &str) -> Option<String> {
        let answer = section(prompt, "[Generated Answer]")?;
        let mut scores = serde_json::Map::new();
        for (idx, text) in prompt_points(&section(prompt, "[Scoring points]")?) {
            let conflict = coverage(&text, &answer) > 0.0
                && stable_hash(&[&seed.to_string(), "pcp", &text, &answer]).is_multiple_of(7);
            let entry = if conflict {
                json!({"penalty_scores": 1, "explanation": "The answer contradicts this scoring point."})
            } else {
                json!({"penalty_scores": 0, "explanation": "No conflicting content."})
            };
            scores.insert(idx.to_string(), entry);
        }
        Some(serde_json::to_string_pretty(&json!({ "point-wise penalty scores": scores })).expect("json"))
    }

    fn coarse3(prompt: &str) -> Option<String> {
        let cov = coverage(&section(prompt, "[Reference answer]")?, &section(prompt, "[Generated Answer]")?);
        let (rating, reason) = if cov >= 0.6 {
            (json!(1), "The answer covers the key information of the reference.")
        } else if cov >= 0.3 {
            (json!(0.5), "The answer partially covers the reference.")
        } else {
            (json!(0), "The answer misses most of the reference.")
        };
        Some(json!({"reason": reason, "rating": rating}).to_string())
    }

    fn rank(seed: u64, prompt: &str) -> Option<String> {
        let reference = section(prompt, "[Reference answer]")?;
        let block = section(prompt, "[Responses]")?;
        let mut items: Vec<(String, String)> = Vec::new();
        for line in block.lines() {
            let t = line.trim();
            let is_label = t.len() > 3
                && t.starts_with("[R")
                && t.ends_with(']')
                && t[2..t.len() - 1].chars().all(|c| c.is_ascii_digit());
            if is_label {
                items.push((t[1..t.len() - 1].to_owned(), String::new()));
            } else if let Some(last) = items.last_mut() {
                last.1.push_str(line);
                last.1.push('\n');
            }
        }
        if items.is_empty() {
            return None;
        }
        let mut scored: Vec<(f64, u64, String)> = items
            .into_iter()
            .map(|(label, text)| (coverage(&reference, &text), stable_hash(&[&seed.to_string(), &text]), label))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let labels: Vec<String> = scored.into_iter().map(|s| s.2).collect();
        Some(serde_json::to_string(&labels).expect("json"))
    }

    fn prompt_optim(prompt: &str) -> Option<String> {
        let base = section(prompt, "[Base prompt]")?;
        let corrections = section(prompt, "[Corrected points]").unwrap_or_default();
        let notes: Vec<&str> = corrections.lines().filter_map(|l| l.trim().strip_prefix("Note: ")).collect();
        let mut out = base;
        if !notes.is_empty() {
            out.push_str("\n## Additional guidance:\n");
            for n in notes {
                out.push_str(&format!("- {n}\n"));
            }
        }
        Some(out)
    }

    fn rubric(prompt: &str) -> Option<String> {
        let reference = section(prompt, "[Reference answer]")?;
        let answer = section(prompt, "[Generated Answer]")?;
        let rating = 1 + (coverage(&reference, &answer) * 4.0).round() as i64;
        Some(json!({ "rating": rating }).to_string())
    }

    pub(super) fn answer(seed: u64, req: &JudgeRequest) -> Option<String> {
        let p = &req.prompt_text;
        match req.tag.as_str() {
            tags::POINTS => points(seed, p),
            tags::WPA => wpa(seed, p),
            tags::PCP => pcp(seed, p),
            tags::COARSE3 => coarse3(p),
            tags::RANK => rank(seed, p),
            tags::PROMPT_OPTIM => prompt_optim(p),
            tags::RUBRIC => rubric(p),
            tags::ERROR_TYPE => Some(json!({"error_type": "other"}).to_string()),
            _ => None,
        }
    }
}
