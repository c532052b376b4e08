//! Judge-backed assessments and their output grammars.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Value};
use thiserror::Error;

use super::MetricsError;
use crate::domain::{Alignment, Penalty, PenaltyAssessment, PointAssessment, ScoringPoint};
use crate::jsonout::{as_number, extract, JsonOutError, Shape};
use crate::judge::{tags, with_parse_retries, Judge, JudgeRequest, RetryError};
use crate::points::serialize_for_prompt;
use crate::template::PromptTemplate;

pub const ALIGNMENT_KEY: &str = "point-wise scores";
pub const PENALTY_KEY: &str = "point-wise penalty scores";
pub const MATCH_FIELD: &str = "match_scores";
pub const PENALTY_FIELD: &str = "penalty_scores";
pub const EXPLANATION_FIELD: &str = "explanation";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssessGrammarError {
    #[error(transparent)]
    Json(#[from] JsonOutError),
    #[error("missing top-level key {0:?}")]
    MissingKey(&'static str),
    #[error("output must contain exactly the same set of IDs as the input: expected {expected:?}, found {found:?}")]
    IdSet { expected: Vec<u32>, found: Vec<String> },
    #[error(
        "the number of penalty scores should equal the number of scoring points: expected {expected}, found {found}"
    )]
    Count { expected: usize, found: usize },
    #[error("point {id}: {reason}")]
    Entry { id: String, reason: String },
    #[error("point {id}: {field} {value} not in {{{allowed}}}")]
    Value { id: String, field: &'static str, value: f64, allowed: &'static str },
    #[error("rating {value} not in {{{allowed}}}")]
    Rating { value: f64, allowed: String },
    #[error("no rating found in judge output")]
    NoRating,
}

fn entries<'a>(v: &'a Value, key: &'static str) -> Result<&'a Map<String, Value>, AssessGrammarError> {
    v.get(key).and_then(Value::as_object).ok_or(AssessGrammarError::MissingKey(key))
}

/// Maps entry keys to point indices, requiring the key set to equal `points`' indices.
fn match_ids<'a>(
    map: &'a Map<String, Value>,
    points: &[ScoringPoint],
) -> Result<BTreeMap<u32, (&'a String, &'a Value)>, AssessGrammarError> {
    let expected: BTreeSet<u32> = points.iter().map(|p| p.index).collect();
    let id_error = || AssessGrammarError::IdSet {
        expected: expected.iter().copied().collect(),
        found: map.keys().cloned().collect(),
    };
    let mut out = BTreeMap::new();
    for (k, v) in map {
        let id: u32 = k.trim().parse().map_err(|_| id_error())?;
        if out.insert(id, (k, v)).is_some() {
            return Err(id_error());
        }
    }
    if out.keys().copied().collect::<BTreeSet<_>>() != expected {
        return Err(id_error());
    }
    Ok(out)
}

fn entry_fields<'a>(id: &str, entry: &'a Value, field: &'static str) -> Result<(f64, &'a str), AssessGrammarError> {
    let obj = entry
        .as_object()
        .ok_or_else(|| AssessGrammarError::Entry { id: id.to_owned(), reason: "entry is not an object".into() })?;
    let value = obj
        .get(field)
        .ok_or_else(|| AssessGrammarError::Entry { id: id.to_owned(), reason: format!("missing {field:?}") })?;
    let value = as_number(value)
        .ok_or_else(|| AssessGrammarError::Entry { id: id.to_owned(), reason: format!("{field:?} is not a number") })?;
    let explanation = obj.get(EXPLANATION_FIELD).and_then(Value::as_str).unwrap_or("");
    Ok((value, explanation))
}

/// Parses the per-point alignment answer. Assessments come back in `points` order.
pub fn parse_alignment_output(raw: &str, points: &[ScoringPoint]) -> Result<Vec<PointAssessment>, AssessGrammarError> {
    let v = extract(raw, Shape::Object)?;
    let ids = match_ids(entries(&v, ALIGNMENT_KEY)?, points)?;
    ids.into_iter()
        .map(|(idx, (key, entry))| {
            let (value, explanation) = entry_fields(key, entry, MATCH_FIELD)?;
            let alignment = Alignment::from_value(value).map_err(|_| AssessGrammarError::Value {
                id: key.clone(),
                field: MATCH_FIELD,
                value,
                allowed: "0, 0.5, 1",
            })?;
            Ok(PointAssessment::new(idx, alignment, explanation))
        })
        .collect()
}

/// Parses the per-point conflict answer.
pub fn parse_penalty_output(raw: &str, points: &[ScoringPoint]) -> Result<Vec<PenaltyAssessment>, AssessGrammarError> {
    let v = extract(raw, Shape::Object)?;
    let map = entries(&v, PENALTY_KEY)?;
    if map.len() != points.len() {
        return Err(AssessGrammarError::Count { expected: points.len(), found: map.len() });
    }
    let ids = match_ids(map, points)?;
    ids.into_iter()
        .map(|(idx, (key, entry))| {
            let (value, explanation) = entry_fields(key, entry, PENALTY_FIELD)?;
            let penalty = Penalty::from_value(value).map_err(|_| AssessGrammarError::Value {
                id: key.clone(),
                field: PENALTY_FIELD,
                value,
                allowed: "0, 1",
            })?;
            Ok(PenaltyAssessment::new(idx, penalty, explanation))
        })
        .collect()
}

/// Parses `{"reason": …, "rating": …}` with rating in {0, 0.5, 1}.
pub fn parse_coarse3_output(raw: &str) -> Result<(Alignment, String), AssessGrammarError> {
    let v = extract(raw, Shape::Object)?;
    let value = v.get("rating").and_then(as_number).ok_or(AssessGrammarError::NoRating)?;
    let rating =
        Alignment::from_value(value).map_err(|_| AssessGrammarError::Rating { value, allowed: "0, 0.5, 1".into() })?;
    let reason = v.get("reason").and_then(Value::as_str).unwrap_or("").to_owned();
    Ok((rating, reason))
}

fn last_line_number(raw: &str) -> Option<f64> {
    static NUM: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
    let re = NUM.get_or_init(|| regex::Regex::new(r"-?\d+(?:\.\d+)?").expect("valid regex"));
    let line = raw.lines().rev().find(|l| !l.trim().is_empty())?;
    re.find_iter(line).last()?.as_str().parse::<f64>().ok()
}

/// Reads a rating from a JSON `"rating"` field or a bare number on the last
/// non-empty line, and checks it against `scale`.
pub fn parse_rating(raw: &str, scale: &[f64]) -> Result<f64, AssessGrammarError> {
    let from_json = extract(raw, Shape::Object).ok().and_then(|v| v.get("rating").and_then(as_number));
    let value = from_json.or_else(|| last_line_number(raw)).ok_or(AssessGrammarError::NoRating)?;
    if scale.contains(&value) {
        Ok(value)
    } else {
        let allowed = scale.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ");
        Err(AssessGrammarError::Rating { value, allowed })
    }
}

fn nonempty(points: &[ScoringPoint]) -> Result<(), MetricsError> {
    if points.is_empty() {
        Err(MetricsError::Precondition("no scoring points".into()))
    } else {
        Ok(())
    }
}

pub fn render_alignment_prompt(
    template: &PromptTemplate,
    question: &str,
    points: &[ScoringPoint],
    response: &str,
) -> Result<String, MetricsError> {
    let serialized = serialize_for_prompt(points);
    let bindings = BTreeMap::from([
        ("question", question),
        ("scoring_points", serialized.as_str()),
        ("generated_answer", response),
    ]);
    Ok(template.render_checked(&["question", "scoring_points", "generated_answer"], &bindings)?)
}

pub fn render_conflict_prompt(
    template: &PromptTemplate,
    question: &str,
    reference: &str,
    points: &[ScoringPoint],
    response: &str,
) -> Result<String, MetricsError> {
    let serialized = serialize_for_prompt(points);
    let bindings = BTreeMap::from([
        ("question", question),
        ("reference_answer", reference),
        ("scoring_points", serialized.as_str()),
        ("generated_answer", response),
    ]);
    Ok(template.render_checked(&["question", "scoring_points", "generated_answer"], &bindings)?)
}

pub fn render_coarse3_prompt(
    template: &PromptTemplate,
    question: &str,
    reference: &str,
    response: &str,
) -> Result<String, MetricsError> {
    let bindings =
        BTreeMap::from([("question", question), ("reference_answer", reference), ("generated_answer", response)]);
    Ok(template.render_checked(&["reference_answer", "generated_answer"], &bindings)?)
}

fn run<T>(
    judge: &dyn Judge,
    what: &'static str,
    tag: &str,
    prompt: String,
    parse_retries: u32,
    parse: impl Fn(&str) -> Result<T, AssessGrammarError>,
) -> Result<T, MetricsError> {
    let req = JudgeRequest::new(tag, prompt)?;
    with_parse_retries(judge, &req, parse_retries, parse).map_err(|e| match e {
        RetryError::Judge(e) => MetricsError::Judge(e),
        RetryError::Exhausted { attempts, last_error, last_raw } => {
            MetricsError::Failed { what, attempts, last_error, last_raw }
        }
    })
}

/// One batched judge call judging every point's coverage.
pub fn assess_alignment(
    judge: &dyn Judge,
    template: &PromptTemplate,
    question: &str,
    points: &[ScoringPoint],
    response: &str,
    parse_retries: u32,
) -> Result<Vec<PointAssessment>, MetricsError> {
    nonempty(points)?;
    let prompt = render_alignment_prompt(template, question, points, response)?;
    run(judge, "alignment assessment", tags::WPA, prompt, parse_retries, |raw| parse_alignment_output(raw, points))
}

/// One batched judge call flagging points the response contradicts.
pub fn assess_conflicts(
    judge: &dyn Judge,
    template: &PromptTemplate,
    question: &str,
    reference: &str,
    points: &[ScoringPoint],
    response: &str,
    parse_retries: u32,
) -> Result<Vec<PenaltyAssessment>, MetricsError> {
    nonempty(points)?;
    let prompt = render_conflict_prompt(template, question, reference, points, response)?;
    run(judge, "conflict assessment", tags::PCP, prompt, parse_retries, |raw| parse_penalty_output(raw, points))
}

/// Holistic three-level rating of a response against the reference.
pub fn coarse3(
    judge: &dyn Judge,
    template: &PromptTemplate,
    question: &str,
    reference: &str,
    response: &str,
    parse_retries: u32,
) -> Result<(f64, String), MetricsError> {
    let prompt = render_coarse3_prompt(template, question, reference, response)?;
    let (rating, reason) = run(judge, "coarse3 rating", tags::COARSE3, prompt, parse_retries, parse_coarse3_output)?;
    Ok((rating.value(), reason))
}

/// Generic harness for user-supplied rubric prompts.
pub fn rubric_score(
    judge: &dyn Judge,
    template: &PromptTemplate,
    bindings: &BTreeMap<&str, &str>,
    expected_scale: &[f64],
    parse_retries: u32,
) -> Result<f64, MetricsError> {
    if expected_scale.is_empty() {
        return Err(MetricsError::Precondition("empty rating scale".into()));
    }
    let prompt = template.render(bindings)?;
    run(judge, "rubric rating", tags::RUBRIC, prompt, parse_retries, |raw| parse_rating(raw, expected_scale))
}
