//! Domain types shared by every stage: instances, responses, scoring points and
//! the per-point judgements made against them.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("id empty")]
    EmptyId,
    #[error("question empty")]
    EmptyQuestion,
    #[error("reference_answer empty")]
    EmptyReference,
    #[error("model_id empty")]
    EmptyModelId,
    #[error("duplicate model_id {0:?} among responses")]
    DuplicateModel(String),
    #[error("scoring point text empty (index {0})")]
    EmptyPointText(u32),
    #[error("scoring point index must be positive")]
    ZeroIndex,
    #[error("weight {0} invalid: the weight of the points can only be 1, 2 or 3")]
    InvalidWeight(i64),
    #[error("alignment {0} invalid: must be one of 0, 0.5, 1")]
    InvalidAlignment(f64),
    #[error("penalty {0} invalid: must be 0 or 1")]
    InvalidPenalty(f64),
    #[error("scoring point indices must be 1..{expected} in order, found {found} at position {position}")]
    NonContiguousIndices { expected: usize, found: u32, position: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Summarization,
    QuestionAnswering,
    MultiTurnConversation,
}

/// One evaluation unit: long context, question and reference answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    #[serde(default)]
    pub dataset: String,
    #[serde(default)]
    pub domain: String,
    pub task_type: TaskType,
    #[serde(default)]
    pub context: String,
    pub question: String,
    pub reference_answer: String,
}

/// A candidate response produced by one model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawResponse", into = "RawResponse")]
pub struct GeneratedResponse {
    pub model_id: String,
    pub text: String,
    /// Length of `text` in Unicode scalar values.
    pub char_length: usize,
}

#[derive(Serialize, Deserialize)]
struct RawResponse {
    model_id: String,
    text: String,
}

impl From<RawResponse> for GeneratedResponse {
    fn from(raw: RawResponse) -> Self {
        GeneratedResponse::new(raw.model_id, raw.text)
    }
}

impl From<GeneratedResponse> for RawResponse {
    fn from(r: GeneratedResponse) -> Self {
        RawResponse { model_id: r.model_id, text: r.text }
    }
}

impl GeneratedResponse {
    pub fn new(model_id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let char_length = text.chars().count();
        GeneratedResponse { model_id: model_id.into(), text, char_length }
    }
}

/// Checks every invariant of an instance and its attached responses.
pub fn validate_instance(inst: &Instance, responses: &[GeneratedResponse]) -> Result<(), ValidationError> {
    if inst.id.trim().is_empty() {
        return Err(ValidationError::EmptyId);
    }
    if inst.question.trim().is_empty() {
        return Err(ValidationError::EmptyQuestion);
    }
    if inst.reference_answer.trim().is_empty() {
        return Err(ValidationError::EmptyReference);
    }
    let mut seen = HashSet::new();
    for r in responses {
        if r.model_id.trim().is_empty() {
            return Err(ValidationError::EmptyModelId);
        }
        if !seen.insert(r.model_id.as_str()) {
            return Err(ValidationError::DuplicateModel(r.model_id.clone()));
        }
    }
    Ok(())
}

/// One factorized unit of a reference answer with its importance weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct ScoringPoint {
    pub index: u32,
    pub text: String,
    pub weight: u8,
}

#[derive(Deserialize)]
struct RawPoint {
    index: u32,
    text: String,
    weight: i64,
}

impl TryFrom<RawPoint> for ScoringPoint {
    type Error = ValidationError;
    fn try_from(raw: RawPoint) -> Result<Self, Self::Error> {
        ScoringPoint::new(raw.index, raw.text, raw.weight)
    }
}

impl ScoringPoint {
    pub fn new(index: u32, text: impl Into<String>, weight: i64) -> Result<Self, ValidationError> {
        let text = text.into();
        if index == 0 {
            return Err(ValidationError::ZeroIndex);
        }
        if text.trim().is_empty() {
            return Err(ValidationError::EmptyPointText(index));
        }
        if !(1..=3).contains(&weight) {
            return Err(ValidationError::InvalidWeight(weight));
        }
        Ok(ScoringPoint { index, text, weight: weight as u8 })
    }

    pub fn weight_f64(&self) -> f64 {
        f64::from(self.weight)
    }
}

/// Checks that indices run 1..K in order.
pub fn validate_point_list(points: &[ScoringPoint]) -> Result<(), ValidationError> {
    for (pos, p) in points.iter().enumerate() {
        if p.index as usize != pos + 1 {
            return Err(ValidationError::NonContiguousIndices {
                expected: points.len(),
                found: p.index,
                position: pos,
            });
        }
        if !(1..=3).contains(&p.weight) {
            return Err(ValidationError::InvalidWeight(i64::from(p.weight)));
        }
    }
    Ok(())
}

/// Three-level alignment degree of a response against one scoring point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Alignment {
    None,
    Partial,
    Full,
}

impl Alignment {
    pub const ALL: [Alignment; 3] = [Alignment::None, Alignment::Partial, Alignment::Full];

    pub fn value(self) -> f64 {
        match self {
            Alignment::None => 0.0,
            Alignment::Partial => 0.5,
            Alignment::Full => 1.0,
        }
    }

    pub fn from_value(v: f64) -> Result<Self, ValidationError> {
        if v == 0.0 {
            Ok(Alignment::None)
        } else if v == 0.5 {
            Ok(Alignment::Partial)
        } else if v == 1.0 {
            Ok(Alignment::Full)
        } else {
            Err(ValidationError::InvalidAlignment(v))
        }
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl Serialize for Alignment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Alignment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Alignment::from_value(v).map_err(serde::de::Error::custom)
    }
}

/// Error taxonomy for points that are not fully covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorType {
    MissingKeyInformation,
    VagueOrIndirectAnswer,
    WrongInformation,
    IrrelevantResponse,
    Other,
}

impl ErrorType {
    pub const ALL: [ErrorType; 5] = [
        ErrorType::MissingKeyInformation,
        ErrorType::VagueOrIndirectAnswer,
        ErrorType::WrongInformation,
        ErrorType::IrrelevantResponse,
        ErrorType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorType::MissingKeyInformation => "missing_key_information",
            ErrorType::VagueOrIndirectAnswer => "vague_or_indirect_answer",
            ErrorType::WrongInformation => "wrong_information",
            ErrorType::IrrelevantResponse => "irrelevant_response",
            ErrorType::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let norm: String = s.trim().to_lowercase().chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect();
        ErrorType::ALL.into_iter().find(|t| t.as_str() == norm.trim_matches('_'))
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAssessment {
    pub point_index: u32,
    pub alignment: Alignment,
    pub explanation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_type: Option<ErrorType>,
}

impl PointAssessment {
    pub fn new(point_index: u32, alignment: Alignment, explanation: impl Into<String>) -> Self {
        PointAssessment { point_index, alignment, explanation: explanation.into(), error_type: None }
    }

    /// Attaches an error type; dropped when the point is fully covered.
    pub fn with_error_type(mut self, error_type: ErrorType) -> Self {
        self.error_type = (self.alignment != Alignment::Full).then_some(error_type);
        self
    }
}

/// Binary conflict indicator of a response against one scoring point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Penalty {
    Clear,
    Conflict,
}

impl Penalty {
    pub fn value(self) -> f64 {
        match self {
            Penalty::Clear => 0.0,
            Penalty::Conflict => 1.0,
        }
    }

    pub fn from_value(v: f64) -> Result<Self, ValidationError> {
        if v == 0.0 {
            Ok(Penalty::Clear)
        } else if v == 1.0 {
            Ok(Penalty::Conflict)
        } else {
            Err(ValidationError::InvalidPenalty(v))
        }
    }
}

impl Serialize for Penalty {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for Penalty {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Penalty::from_value(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyAssessment {
    pub point_index: u32,
    pub penalty: Penalty,
    pub explanation: String,
}

impl PenaltyAssessment {
    pub fn new(point_index: u32, penalty: Penalty, explanation: impl Into<String>) -> Self {
        PenaltyAssessment { point_index, penalty, explanation: explanation.into() }
    }
}

/// Canonical score names used as keys in [`InstanceEvaluation::scores`].
pub mod score_names {
    pub const WPA: &str = "WPA";
    pub const PCP: &str = "PCP";
    pub const COARSE3: &str = "Coarse3";
    pub const MERGE: &str = "Merge";
    pub const BLEU: &str = "BLEU";
    pub const ROUGE_L: &str = "ROUGE_L";

    /// Scores whose value must lie in `[0, 1]`.
    pub const UNIT_INTERVAL: [&str; 6] = [WPA, PCP, COARSE3, MERGE, BLEU, ROUGE_L];
}

/// All scores computed for one (instance, response) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEvaluation {
    pub instance_id: String,
    pub model_id: String,
    pub scores: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point_assessments: Option<Vec<PointAssessment>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_assessments: Option<Vec<PenaltyAssessment>>,
}

impl InstanceEvaluation {
    pub fn new(instance_id: impl Into<String>, model_id: impl Into<String>) -> Self {
        InstanceEvaluation {
            instance_id: instance_id.into(),
            model_id: model_id.into(),
            scores: BTreeMap::new(),
            point_assessments: None,
            penalty_assessments: None,
        }
    }

    /// Every score finite; unit-interval scores inside `[0, 1]`.
    pub fn scores_valid(&self) -> bool {
        self.scores.iter().all(|(name, v)| {
            v.is_finite() && (!score_names::UNIT_INTERVAL.contains(&name.as_str()) || (0.0..=1.0).contains(v))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance() -> Instance {
        Instance {
            id: "i1".into(),
            dataset: "d".into(),
            domain: "hotel".into(),
            task_type: TaskType::Summarization,
            context: String::new(),
            question: "Q".into(),
            reference_answer: "A".into(),
        }
    }

    #[test]
    fn valid_instance_with_ten_models() {
        let responses: Vec<_> = (0..10).map(|i| GeneratedResponse::new(format!("m{i}"), "x")).collect();
        assert_eq!(validate_instance(&instance(), &responses), Ok(()));
    }

    #[test]
    fn empty_reference_is_named() {
        let mut inst = instance();
        inst.reference_answer = "  ".into();
        let err = validate_instance(&inst, &[]).unwrap_err();
        assert_eq!(err.to_string(), "reference_answer empty");
    }

    #[test]
    fn duplicate_model_rejected() {
        let responses = vec![GeneratedResponse::new("gpt-4o", "a"), GeneratedResponse::new("gpt-4o", "b")];
        assert_eq!(validate_instance(&instance(), &responses), Err(ValidationError::DuplicateModel("gpt-4o".into())));
    }

    #[test]
    fn char_length_counts_scalars() {
        let r = GeneratedResponse::new("m", "héllo 世界");
        assert_eq!(r.char_length, 8);
    }

    #[test]
    fn weight_outside_range_rejected() {
        assert!(ScoringPoint::new(1, "x", 0).is_err());
        assert!(ScoringPoint::new(1, "x", 4).is_err());
        assert!(ScoringPoint::new(1, "", 2).is_err());
        assert!(serde_json::from_str::<ScoringPoint>(r#"{"index":1,"text":"t","weight":5}"#).is_err());
    }

    #[test]
    fn alignment_round_trips_through_json() {
        let a = PointAssessment::new(2, Alignment::Partial, "half");
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("\"alignment\":0.5"));
        assert_eq!(serde_json::from_str::<PointAssessment>(&s).unwrap(), a);
        assert!(
            serde_json::from_str::<PointAssessment>(r#"{"point_index":1,"alignment":0.7,"explanation":""}"#).is_err()
        );
    }

    #[test]
    fn full_alignment_never_carries_error_type() {
        let a = PointAssessment::new(1, Alignment::Full, "ok").with_error_type(ErrorType::Other);
        assert_eq!(a.error_type, None);
        let b = PointAssessment::new(1, Alignment::None, "no").with_error_type(ErrorType::Other);
        assert_eq!(b.error_type, Some(ErrorType::Other));
    }

    #[test]
    fn error_type_parse_is_lenient_on_separators() {
        assert_eq!(ErrorType::parse("Missing key information"), Some(ErrorType::MissingKeyInformation));
        assert_eq!(ErrorType::parse("wrong-information"), Some(ErrorType::WrongInformation));
        assert_eq!(ErrorType::parse("nonsense"), None);
    }

    #[test]
    fn score_range_check() {
        let mut e = InstanceEvaluation::new("i", "m");
        e.scores.insert("WPA".into(), 0.5);
        assert!(e.scores_valid());
        e.scores.insert("PCP".into(), 1.5);
        assert!(!e.scores_valid());
    }
}
