use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::domain::ScoringPoint;
use crate::rng::substream;

/// Linear map onto `[0, 1]`; an all-equal input maps to 0.5 everywhere.
pub fn normalize_scores(values: &[f64]) -> Vec<f64> {
    let (min, max) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if max.partial_cmp(&min) != Some(std::cmp::Ordering::Greater) {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| (v - min) / (max - min)).collect()
}

/// Native rating scale of a metric, as understood by [`scale_reduce`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatingScale {
    /// Ratings 1..=5.
    FiveLevel,
    /// Ratings 0, 0.5, 1.
    ThreeLevel,
}

impl RatingScale {
    pub fn of(metric_name: &str) -> Option<Self> {
        match metric_name.to_ascii_lowercase().as_str() {
            "coarse5" | "checklist" | "rubric5" | "fine5" => Some(RatingScale::FiveLevel),
            "coarse3" | "wpa_match" | "alignment" => Some(RatingScale::ThreeLevel),
            _ => None,
        }
    }
}

/// Collapses a rating to two levels: 5-level {1,2}→1 and {3,4,5}→5;
/// 3-level {0.5,1}→1 and 0→0.
pub fn scale_reduce(metric_name: &str, value: f64) -> Result<f64, AnalysisError> {
    let scale = RatingScale::of(metric_name)
        .ok_or_else(|| AnalysisError::Mapping(format!("no rating scale known for metric {metric_name:?}")))?;
    let off_scale = || AnalysisError::Mapping(format!("{value} is not on the scale of {metric_name}"));
    match scale {
        RatingScale::FiveLevel => match value {
            v if v == 1.0 || v == 2.0 => Ok(1.0),
            v if v == 3.0 || v == 4.0 || v == 5.0 => Ok(5.0),
            _ => Err(off_scale()),
        },
        RatingScale::ThreeLevel => match value {
            0.0 => Ok(0.0),
            v if v == 0.5 || v == 1.0 => Ok(1.0),
            _ => Err(off_scale()),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Equal,
    Random,
}

/// Replaces every weight: `Equal` sets 1, `Random` draws uniformly from
/// {1, 2, 3}. Indices and texts are kept.
pub fn disturb_weights(
    points: &[ScoringPoint],
    mode: WeightMode,
    seed: u64,
) -> Result<Vec<ScoringPoint>, AnalysisError> {
    if points.is_empty() {
        return Err(AnalysisError::Precondition("no scoring points to disturb".into()));
    }
    let mut rng = substream(seed, &["weights"]);
    Ok(points
        .iter()
        .map(|p| {
            let weight = match mode {
                WeightMode::Equal => 1,
                WeightMode::Random => rng.random_range(1..=3u8),
            };
            ScoringPoint { weight, ..p.clone() }
        })
        .collect())
}
