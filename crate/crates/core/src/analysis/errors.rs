use std::collections::BTreeMap;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::domain::{Alignment, ErrorType, InstanceEvaluation};
use crate::jsonout::{extract, Shape};
use crate::judge::{tags, with_parse_retries, Judge, JudgeRequest, RetryError};

/// One scoring point a response did not fully cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub instance_id: String,
    pub model_id: String,
    #[serde(default)]
    pub dataset: String,
    pub point_index: u32,
    /// Never [`Alignment::Full`].
    pub alignment: Alignment,
    pub error_type: ErrorType,
}

/// Ordered keyword rules over judge explanations. The first matching rule
/// wins; an explicit `error type: <label>` in the text beats every rule.
#[derive(Debug, Clone)]
pub struct ErrorClassifier {
    pub rules: Vec<(ErrorType, Vec<String>)>,
    /// Treat "but" followed by two different numbers as contradicting facts.
    pub numeric_discrepancy: bool,
}

impl Default for ErrorClassifier {
    fn default() -> Self {
        let rule = |t, words: &[&str]| (t, words.iter().map(|w| w.to_string()).collect());
        ErrorClassifier {
            rules: vec![
                rule(
                    ErrorType::WrongInformation,
                    &[
                        "wrong",
                        "incorrect",
                        "contradict",
                        "conflict",
                        "inaccurate",
                        "inconsistent",
                        "mismatch",
                        "false",
                        "instead of",
                        "but the context says",
                        "but the reference says",
                    ],
                ),
                rule(ErrorType::VagueOrIndirectAnswer, &["vague", "indirect", "partial", "implicit"]),
                rule(ErrorType::IrrelevantResponse, &["irrelevant", "off-topic", "off topic", "unrelated"]),
                rule(ErrorType::MissingKeyInformation, &["missing", "omit", "does not mention", "absent"]),
            ],
            numeric_discrepancy: true,
        }
    }
}

fn explicit_label(text: &str) -> Option<ErrorType> {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"(?i)error[ _-]?type\s*[:=]\s*([a-z_ \-]+)").expect("valid regex"));
    let caps = re.captures(text)?;
    let words: Vec<&str> = caps[1].split_whitespace().take(4).collect();
    // Longest prefix of the captured words that names a type.
    (1..=words.len()).rev().find_map(|n| ErrorType::parse(&words[..n].join("_")))
}

fn numbers_disagree(text: &str) -> bool {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"\d+(?:\.\d+)?").expect("valid regex"));
    let lower = text.to_lowercase();
    let Some(but) = lower.find(" but ") else { return false };
    let before: Vec<&str> = re.find_iter(&lower[..but]).map(|m| m.as_str()).collect();
    let after: Vec<&str> = re.find_iter(&lower[but..]).map(|m| m.as_str()).collect();
    before.iter().any(|a| after.iter().any(|b| a != b))
}

impl ErrorClassifier {
    pub fn classify(&self, explanation: &str) -> ErrorType {
        if let Some(t) = explicit_label(explanation) {
            return t;
        }
        let lower = explanation.to_lowercase();
        for (t, words) in &self.rules {
            if words.iter().any(|w| lower.contains(w.as_str())) {
                return *t;
            }
            if *t == ErrorType::WrongInformation && self.numeric_discrepancy && numbers_disagree(explanation) {
                return *t;
            }
        }
        ErrorType::Other
    }
}

/// Rule-based classification with the default rules.
pub fn classify_error(explanation: &str, alignment: Alignment) -> Result<ErrorType, AnalysisError> {
    if alignment == Alignment::Full {
        return Err(AnalysisError::Precondition("fully covered points carry no error type".into()));
    }
    Ok(ErrorClassifier::default().classify(explanation))
}

const JUDGE_PROMPT: &str = "Classify why a response did not fully cover a scoring point.\n\
Categories: missing_key_information, vague_or_indirect_answer, wrong_information, irrelevant_response, other.\n\
Answer with a JSON object {\"error_type\": \"<category>\"} and nothing else.\n\n\
[Scoring point]\n{point}\n\n[Explanation]\n{explanation}\n";

/// Judge-backed classification, for use when configured instead of the rules.
pub fn classify_error_with_judge(
    judge: &dyn Judge,
    point_text: &str,
    explanation: &str,
    parse_retries: u32,
) -> Result<ErrorType, AnalysisError> {
    let prompt = JUDGE_PROMPT.replace("{point}", point_text).replace("{explanation}", explanation);
    let req = JudgeRequest::new(tags::ERROR_TYPE, prompt)?;
    let parse = |raw: &str| -> Result<ErrorType, AnalysisError> {
        let v = extract(raw, Shape::Object).map_err(|e| AnalysisError::Mapping(e.to_string()))?;
        v.get("error_type")
            .and_then(|t| t.as_str())
            .and_then(ErrorType::parse)
            .ok_or_else(|| AnalysisError::Mapping(format!("no known error_type in {v}")))
    };
    with_parse_retries(judge, &req, parse_retries, parse).map_err(|e| match e {
        RetryError::Judge(e) => AnalysisError::Judge(e),
        RetryError::Exhausted { last_error, .. } => last_error,
    })
}

/// Error records for every not fully covered point of `eval`. A stored error
/// type is kept; missing ones are classified from the explanation.
pub fn error_records(eval: &InstanceEvaluation, dataset: &str, classifier: &ErrorClassifier) -> Vec<ErrorRecord> {
    eval.point_assessments
        .iter()
        .flatten()
        .filter(|a| a.alignment != Alignment::Full)
        .map(|a| ErrorRecord {
            instance_id: eval.instance_id.clone(),
            model_id: eval.model_id.clone(),
            dataset: dataset.to_owned(),
            point_index: a.point_index,
            alignment: a.alignment,
            error_type: a.error_type.unwrap_or_else(|| classifier.classify(&a.explanation)),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Model,
    Dataset,
}

/// Share of each error type within each group; each group sums to 1.
pub fn error_distribution(records: &[ErrorRecord], group_by: GroupBy) -> BTreeMap<String, BTreeMap<ErrorType, f64>> {
    let mut counts: BTreeMap<String, BTreeMap<ErrorType, usize>> = BTreeMap::new();
    for r in records {
        let key = match group_by {
            GroupBy::Model => &r.model_id,
            GroupBy::Dataset => &r.dataset,
        };
        *counts.entry(key.clone()).or_default().entry(r.error_type).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .map(|(g, row)| {
            let total: usize = row.values().sum();
            (g, row.into_iter().map(|(t, c)| (t, c as f64 / total as f64)).collect())
        })
        .collect()
}

/// Counts of records per (error type, alignment). Fully covered records are
/// skipped.
pub fn error_by_alignment(records: &[ErrorRecord]) -> BTreeMap<(ErrorType, Alignment), usize> {
    let mut table = BTreeMap::new();
    for r in records.iter().filter(|r| r.alignment != Alignment::Full) {
        *table.entry((r.error_type, r.alignment)).or_insert(0) += 1;
    }
    table
}
