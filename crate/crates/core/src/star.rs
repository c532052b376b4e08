//! Stratified ranking (STAR) pseudo-labels.
//!
//! A judge sorts all N candidate responses of an instance once. The sorted list
//! is cut into L groups of `ceil(N / L)` consecutive positions and the n-th
//! response of every group is kept, which yields L responses whose quality gap
//! is large enough for a ranking to be trustworthy. Each offset n gives one
//! independent labelled set.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::domain::{GeneratedResponse, Instance};
use crate::jsonout::{extract, JsonOutError, Shape};
use crate::judge::{tags, with_parse_retries, Judge, JudgeError, JudgeRequest, RetryError};
use crate::rng::substream;
use crate::template::{PromptTemplate, TemplateError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StarConfig {
    pub num_groups: usize,
    /// 1-based in-group offsets.
    pub offsets: Vec<usize>,
    pub expected_candidates: usize,
    /// Show the instance context to the ranking judge.
    pub include_context: bool,
    pub parse_retries: u32,
    pub seed: u64,
}

impl Default for StarConfig {
    fn default() -> Self {
        StarConfig {
            num_groups: 3,
            offsets: vec![1, 2],
            expected_candidates: 10,
            include_context: false,
            parse_retries: 2,
            seed: 0,
        }
    }
}

impl StarConfig {
    pub fn stride(&self, sorted_count: usize) -> usize {
        sorted_count.div_ceil(self.num_groups.max(1))
    }

    pub fn validate(&self) -> Result<(), StarError> {
        if self.num_groups == 0 {
            return Err(StarError::Config("num_groups must be positive".into()));
        }
        if self.offsets.is_empty() {
            return Err(StarError::Config("at least one offset is required".into()));
        }
        if self.num_groups > self.expected_candidates {
            return Err(StarError::Config(format!(
                "num_groups {} exceeds expected_candidates {}",
                self.num_groups, self.expected_candidates
            )));
        }
        for &n in &self.offsets {
            stratified_select(self.expected_candidates, self, n)?;
        }
        Ok(())
    }
}

/// One labelled set: the responses at a fixed offset in every group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratifiedRanking {
    pub instance_id: String,
    pub offset: usize,
    /// Best to worst.
    pub selected_model_ids: Vec<String>,
    /// Positions in the judge-sorted order, strictly increasing.
    #[serde(default)]
    pub selected_indices: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RankGrammarError {
    #[error(transparent)]
    Json(#[from] JsonOutError),
    #[error("ranking entry {0} is not a string label")]
    NotLabel(String),
    #[error("unknown label {0:?}")]
    Unknown(String),
    #[error("label {0:?} listed more than once")]
    Duplicate(String),
    #[error("labels missing from ranking: {0:?}")]
    Missing(Vec<String>),
}

#[derive(Debug, Error)]
pub enum StarError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid STAR configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error("ranking failed after {attempts} attempt(s): {last_error}; last output: {last_raw:?}")]
    RankingFailed { attempts: u32, last_error: RankGrammarError, last_raw: String },
}

/// 0-based positions `(l − 1)·stride + n − 1` for `l = 1..=L`, with
/// `stride = ceil(N / L)`.
pub fn stratified_select(sorted_count: usize, cfg: &StarConfig, offset: usize) -> Result<Vec<usize>, StarError> {
    let groups = cfg.num_groups;
    if groups == 0 || sorted_count < groups {
        return Err(StarError::Config(format!("cannot form {groups} groups from {sorted_count} responses")));
    }
    let stride = cfg.stride(sorted_count);
    if offset == 0 || offset > stride {
        return Err(StarError::Config(format!("offset {offset} outside 1..={stride}")));
    }
    let picks: Vec<usize> = (0..groups).map(|l| l * stride + offset - 1).collect();
    if let Some(&bad) = picks.iter().find(|&&i| i >= sorted_count) {
        return Err(StarError::Config(format!(
            "offset {offset} selects position {bad} but only {sorted_count} responses are ranked"
        )));
    }
    Ok(picks)
}

/// Label shown to the judge for the response presented at position `i`.
pub fn label(i: usize) -> String {
    format!("R{}", i + 1)
}

/// Seeded presentation order: `order[k]` is the response shown as `R{k+1}`.
pub fn presentation_order(seed: u64, instance_id: &str, count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut substream(seed, &["star", instance_id]));
    order
}

/// Renders the ranking prompt and returns it with the presentation order.
pub fn render_rank_prompt(
    template: &PromptTemplate,
    instance: &Instance,
    responses: &[GeneratedResponse],
    cfg: &StarConfig,
) -> Result<(String, Vec<usize>), StarError> {
    let order = presentation_order(cfg.seed, &instance.id, responses.len());
    let listing: String =
        order.iter().enumerate().map(|(k, &i)| format!("[{}]\n{}\n\n", label(k), responses[i].text.trim())).collect();
    let context_block = if cfg.include_context && !instance.context.trim().is_empty() {
        format!("\n[Context]\n{}\n", instance.context.trim())
    } else {
        String::new()
    };
    let bindings = BTreeMap::from([
        ("question", instance.question.as_str()),
        ("reference_answer", instance.reference_answer.as_str()),
        ("context_block", context_block.as_str()),
        ("responses", listing.trim_end()),
    ]);
    let prompt = template.render_checked(&["question", "reference_answer", "responses"], &bindings)?;
    Ok((prompt, order))
}

/// Parses a JSON array of labels that must be a permutation of `R1..R{count}`.
/// Returns presentation positions, best first.
pub fn parse_ranking(raw: &str, count: usize) -> Result<Vec<usize>, RankGrammarError> {
    let value = extract(raw, Shape::Array)?;
    let items = value.as_array().expect("array shape");
    let mut seen = vec![false; count];
    let mut out = Vec::with_capacity(count);
    for item in items {
        let Value::String(s) = item else {
            return Err(RankGrammarError::NotLabel(item.to_string()));
        };
        let t = s.trim().trim_start_matches('[').trim_end_matches(']');
        let pos = t
            .strip_prefix(['R', 'r'])
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| (1..=count).contains(&n))
            .ok_or_else(|| RankGrammarError::Unknown(s.clone()))?
            - 1;
        if std::mem::replace(&mut seen[pos], true) {
            return Err(RankGrammarError::Duplicate(s.clone()));
        }
        out.push(pos);
    }
    let missing: Vec<String> = (0..count).filter(|&i| !seen[i]).map(label).collect();
    if !missing.is_empty() {
        return Err(RankGrammarError::Missing(missing));
    }
    Ok(out)
}

/// Asks the judge for a total order of `responses`; returns response indices
/// best first.
pub fn rank_responses(
    judge: &dyn Judge,
    template: &PromptTemplate,
    instance: &Instance,
    responses: &[GeneratedResponse],
    cfg: &StarConfig,
) -> Result<Vec<usize>, StarError> {
    if responses.len() < 2 {
        return Err(StarError::Precondition(format!("ranking needs at least 2 responses, got {}", responses.len())));
    }
    let (prompt, order) = render_rank_prompt(template, instance, responses, cfg)?;
    let req = JudgeRequest::new(tags::RANK, prompt)?;
    let shown =
        with_parse_retries(judge, &req, cfg.parse_retries, |raw| parse_ranking(raw, responses.len())).map_err(|e| {
            match e {
                RetryError::Judge(e) => StarError::Judge(e),
                RetryError::Exhausted { attempts, last_error, last_raw } => {
                    StarError::RankingFailed { attempts, last_error, last_raw }
                }
            }
        })?;
    Ok(shown.into_iter().map(|k| order[k]).collect())
}

/// Selects the labelled sets for every offset from one judge ranking.
pub fn select_from_ranking(
    instance_id: &str,
    responses: &[GeneratedResponse],
    sorted: &[usize],
    cfg: &StarConfig,
) -> Result<Vec<StratifiedRanking>, StarError> {
    cfg.offsets
        .iter()
        .map(|&offset| {
            let selected_indices = stratified_select(sorted.len(), cfg, offset)?;
            let selected_model_ids = selected_indices.iter().map(|&i| responses[sorted[i]].model_id.clone()).collect();
            Ok(StratifiedRanking { instance_id: instance_id.to_owned(), offset, selected_model_ids, selected_indices })
        })
        .collect()
}

/// Ranks once, then emits one [`StratifiedRanking`] per configured offset.
pub fn build_pseudo_labels(
    judge: &dyn Judge,
    template: &PromptTemplate,
    instance: &Instance,
    responses: &[GeneratedResponse],
    cfg: &StarConfig,
) -> Result<Vec<StratifiedRanking>, StarError> {
    if responses.len() != cfg.expected_candidates {
        return Err(StarError::Precondition(format!(
            "instance {} has {} responses, expected {}",
            instance.id,
            responses.len(),
            cfg.expected_candidates
        )));
    }
    cfg.validate()?;
    let sorted = rank_responses(judge, template, instance, responses, cfg)?;
    select_from_ranking(&instance.id, responses, &sorted, cfg)
}
