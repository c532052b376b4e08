//! Scoring-point generation.
//!
//! The judge is asked to factorize a reference answer into weighted points,
//! one per line in the bracketed grammar
//!
//! ```text
//! - [[Text of first scoring point]] | ((3))
//! ```
//!
//! The list marker may be `-`, `*` or absent and surrounding whitespace is
//! ignored. The `[[…]]` and `((…))` delimiters are strict.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::domain::ScoringPoint;
use crate::judge::{tags, with_parse_retries, Judge, JudgeError, JudgeRequest, RetryError};
use crate::template::{PromptTemplate, TemplateError};

pub const DEFAULT_MAX_POINTS: usize = 50;
pub const DEFAULT_PARSE_RETRIES: u32 = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("no well-formed scoring point lines in judge output")]
    Empty,
    #[error("line {line}: weight {weight:?} invalid, the weight of the points can only be 1, 2 or 3: {text:?}")]
    Weight { line: usize, weight: String, text: String },
    #[error("line {line}: unbalanced or malformed delimiters: {text:?}")]
    Delimiters { line: usize, text: String },
    #[error("line {line}: empty scoring point text")]
    EmptyText { line: usize },
    #[error("{count} scoring points exceed the ceiling of {max}")]
    TooMany { count: usize, max: usize },
}

#[derive(Debug, Error)]
pub enum PointsError {
    #[error("{0} must not be empty")]
    Precondition(&'static str),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error("point generation failed after {attempts} attempt(s): {last_error}; last output: {last_raw:?}")]
    GenerationFailed { attempts: u32, last_error: GrammarError, last_raw: String },
    #[error("prompt optimization returned an empty prompt")]
    OptimizationFailed,
}

/// One lexed line of judge output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointGrammarLine {
    pub raw: String,
    pub parsed_text: String,
    pub parsed_weight: u8,
}

fn line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:[-*]\s*)?\[\[(.*)\]\]\s*\|\s*\(\(([^()]*)\)\)\s*$").expect("valid regex"))
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

fn has_delimiter(line: &str) -> bool {
    ["[[", "]]", "((", "))"].iter().any(|d| line.contains(d))
}

/// Lexes one line. `Ok(None)` means the line carries no point (blank, fence
/// or delimiter-free prose).
pub fn lex_line(line_no: usize, line: &str) -> Result<Option<PointGrammarLine>, GrammarError> {
    if line.trim().is_empty() || is_fence(line) {
        return Ok(None);
    }
    let Some(cap) = line_re().captures(line) else {
        if has_delimiter(line) {
            return Err(GrammarError::Delimiters { line: line_no, text: line.to_owned() });
        }
        return Ok(None);
    };
    let text = cap[1].trim();
    if text.is_empty() {
        return Err(GrammarError::EmptyText { line: line_no });
    }
    if text.contains("[[") || text.contains("]]") {
        return Err(GrammarError::Delimiters { line: line_no, text: line.to_owned() });
    }
    let weight_raw = cap[2].trim();
    let weight = match weight_raw.parse::<u8>() {
        Ok(w @ 1..=3) => w,
        _ => return Err(GrammarError::Weight { line: line_no, weight: weight_raw.to_owned(), text: line.to_owned() }),
    };
    Ok(Some(PointGrammarLine { raw: line.to_owned(), parsed_text: text.to_owned(), parsed_weight: weight }))
}

/// Parses judge output into points indexed 1..K in order of appearance.
pub fn parse_points(raw: &str) -> Result<Vec<ScoringPoint>, GrammarError> {
    parse_points_capped(raw, DEFAULT_MAX_POINTS)
}

pub fn parse_points_capped(raw: &str, max_points: usize) -> Result<Vec<ScoringPoint>, GrammarError> {
    let mut points = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if let Some(lexed) = lex_line(i + 1, line)? {
            let index = points.len() as u32 + 1;
            let p = ScoringPoint::new(index, lexed.parsed_text, i64::from(lexed.parsed_weight))
                .expect("lexer enforces point invariants");
            points.push(p);
        }
    }
    if points.is_empty() {
        return Err(GrammarError::Empty);
    }
    if points.len() > max_points {
        return Err(GrammarError::TooMany { count: points.len(), max: max_points });
    }
    Ok(points)
}

/// Writes points in the judge output grammar, one per line.
pub fn format_points(points: &[ScoringPoint]) -> String {
    points.iter().map(|p| format!("- [[{}]] | (({}))\n", p.text, p.weight)).collect()
}

/// Numbered list used inside the alignment and conflict prompts:
/// `<index>. <text> (<weight>)`.
pub fn serialize_for_prompt(points: &[ScoringPoint]) -> String {
    points.iter().map(|p| format!("{}. {} ({})", p.index, p.text, p.weight)).collect::<Vec<_>>().join("\n")
}

pub fn render_points_prompt(template: &PromptTemplate, question: &str, reference: &str) -> Result<String, PointsError> {
    if question.trim().is_empty() {
        return Err(PointsError::Precondition("question"));
    }
    if reference.trim().is_empty() {
        return Err(PointsError::Precondition("reference answer"));
    }
    let bindings = BTreeMap::from([("question", question), ("reference_answer", reference)]);
    Ok(template.render_checked(&["question", "reference_answer"], &bindings)?)
}

/// Options for [`generate_points`].
#[derive(Debug, Clone)]
pub struct PointGenOptions {
    pub parse_retries: u32,
    pub max_points: usize,
}

impl Default for PointGenOptions {
    fn default() -> Self {
        PointGenOptions { parse_retries: DEFAULT_PARSE_RETRIES, max_points: DEFAULT_MAX_POINTS }
    }
}

pub fn generate_points(
    judge: &dyn Judge,
    template: &PromptTemplate,
    question: &str,
    reference: &str,
    opts: &PointGenOptions,
) -> Result<Vec<ScoringPoint>, PointsError> {
    let prompt = render_points_prompt(template, question, reference)?;
    let req = JudgeRequest::new(tags::POINTS, prompt)?;
    with_parse_retries(judge, &req, opts.parse_retries, |raw| parse_points_capped(raw, opts.max_points)).map_err(|e| {
        match e {
            RetryError::Judge(e) => PointsError::Judge(e),
            RetryError::Exhausted { attempts, last_error, last_raw } => {
                PointsError::GenerationFailed { attempts, last_error, last_raw }
            }
        }
    })
}

/// Assembles the meta-prompt asking the judge to rewrite `base` from a set of
/// unexpected points and their manual corrections. `notes[i]`, when present,
/// explains correction `i`.
pub fn render_optimization_prompt(
    meta: &PromptTemplate,
    base: &PromptTemplate,
    question: &str,
    reference: &str,
    originals: &[ScoringPoint],
    corrections: &[ScoringPoint],
    notes: &[String],
) -> Result<String, PointsError> {
    if originals.is_empty() {
        return Err(PointsError::Precondition("original points"));
    }
    if corrections.is_empty() {
        return Err(PointsError::Precondition("corrections"));
    }
    let original_text = format_points(originals);
    let corrected_text: String = corrections
        .iter()
        .enumerate()
        .map(|(i, p)| match notes.get(i).filter(|n| !n.trim().is_empty()) {
            Some(note) => format!("- [[{}]] | (({}))\n  Note: {}\n", p.text, p.weight, note.trim()),
            None => format!("- [[{}]] | (({}))\n", p.text, p.weight),
        })
        .collect();
    let bindings = BTreeMap::from([
        ("base_prompt", base.body.as_str()),
        ("question", question),
        ("reference_answer", reference),
        ("original_points", original_text.as_str()),
        ("corrected_points", corrected_text.as_str()),
    ]);
    Ok(meta.render_checked(
        &["base_prompt", "question", "reference_answer", "original_points", "corrected_points"],
        &bindings,
    )?)
}

/// Asks the judge for an improved point-generation prompt. The result is named
/// `<base.name>-optim`.
#[allow(clippy::too_many_arguments)]
pub fn optimize_prompt(
    judge: &dyn Judge,
    meta: &PromptTemplate,
    base: &PromptTemplate,
    question: &str,
    reference: &str,
    originals: &[ScoringPoint],
    corrections: &[ScoringPoint],
    notes: &[String],
) -> Result<PromptTemplate, PointsError> {
    let prompt = render_optimization_prompt(meta, base, question, reference, originals, corrections, notes)?;
    let raw = judge.complete(&JudgeRequest::new(tags::PROMPT_OPTIM, prompt)?)?;
    let body = raw.trim();
    let body = body
        .strip_prefix("```")
        .and_then(|b| b.split_once('\n').map(|(_, rest)| rest))
        .and_then(|b| b.trim_end().strip_suffix("```"))
        .unwrap_or(body)
        .trim();
    if body.is_empty() {
        return Err(PointsError::OptimizationFailed);
    }
    Ok(PromptTemplate::new(format!("{}-optim", base.name), format!("{body}\n")))
}
