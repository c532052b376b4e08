use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::domain::{PenaltyAssessment, PointAssessment, ScoringPoint};

/// Weight of the holistic rubric score in the merged score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeConfig {
    pub lambda_m: f64,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig { lambda_m: 0.2 }
    }
}

impl MergeConfig {
    pub fn new(lambda_m: f64) -> Result<Self, MetricsError> {
        let cfg = MergeConfig { lambda_m };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if (0.0..=1.0).contains(&self.lambda_m) {
            Ok(())
        } else {
            Err(MetricsError::Precondition(format!("lambda_m must lie in [0, 1], got {}", self.lambda_m)))
        }
    }
}

/// Result of a WPA evaluation with the per-point judgements it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WpaResult {
    pub score: f64,
    pub assessments: Vec<PointAssessment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpResult {
    pub score: f64,
    pub assessments: Vec<PenaltyAssessment>,
}

/// Pairs each point's weight with the value judged for the same index.
fn paired(points: &[ScoringPoint], judged: &[(u32, f64)]) -> Result<Vec<(f64, f64)>, MetricsError> {
    if points.is_empty() {
        return Err(MetricsError::Precondition("no scoring points".into()));
    }
    if points.len() != judged.len() {
        return Err(MetricsError::Pairing(format!("{} scoring points but {} judgements", points.len(), judged.len())));
    }
    let mut by_index = HashMap::with_capacity(judged.len());
    for &(idx, v) in judged {
        if by_index.insert(idx, v).is_some() {
            return Err(MetricsError::Pairing(format!("point {idx} judged twice")));
        }
    }
    points
        .iter()
        .map(|p| {
            by_index
                .get(&p.index)
                .map(|&v| (p.weight_f64(), v))
                .ok_or_else(|| MetricsError::Pairing(format!("no judgement for point {}", p.index)))
        })
        .collect()
}

fn weighted_fraction(pairs: &[(f64, f64)]) -> f64 {
    let (num, den) = pairs.iter().fold((0.0, 0.0), |(n, d), &(w, v)| (n + v * w, d + w));
    num / den
}

/// `Σ mᵢ·wᵢ / Σ wᵢ`.
pub fn compute_wpa(points: &[ScoringPoint], assessments: &[PointAssessment]) -> Result<f64, MetricsError> {
    let judged: Vec<_> = assessments.iter().map(|a| (a.point_index, a.alignment.value())).collect();
    Ok(weighted_fraction(&paired(points, &judged)?))
}

/// `Σ pᵢ·wᵢ / Σ wᵢ`. Higher means more conflicting content.
pub fn compute_pcp(points: &[ScoringPoint], penalties: &[PenaltyAssessment]) -> Result<f64, MetricsError> {
    let judged: Vec<_> = penalties.iter().map(|a| (a.point_index, a.penalty.value())).collect();
    Ok(weighted_fraction(&paired(points, &judged)?))
}

/// `λ·coarse + (1 − λ)·wpa`.
pub fn compute_merge(coarse: f64, wpa: f64, cfg: &MergeConfig) -> Result<f64, MetricsError> {
    cfg.validate()?;
    for (name, v) in [("coarse", coarse), ("wpa", wpa)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(MetricsError::Precondition(format!("{name} score {v} outside [0, 1]")));
        }
    }
    Ok(cfg.lambda_m * coarse + (1.0 - cfg.lambda_m) * wpa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Alignment, Penalty};

    fn pts(weights: &[i64]) -> Vec<ScoringPoint> {
        weights.iter().enumerate().map(|(i, &w)| ScoringPoint::new(i as u32 + 1, format!("p{i}"), w).unwrap()).collect()
    }

    fn aligned(ms: &[f64]) -> Vec<PointAssessment> {
        ms.iter()
            .enumerate()
            .map(|(i, &m)| PointAssessment::new(i as u32 + 1, Alignment::from_value(m).unwrap(), ""))
            .collect()
    }

    fn penalized(ps: &[f64]) -> Vec<PenaltyAssessment> {
        ps.iter()
            .enumerate()
            .map(|(i, &p)| PenaltyAssessment::new(i as u32 + 1, Penalty::from_value(p).unwrap(), ""))
            .collect()
    }

    #[test]
    fn wpa_examples() {
        assert_eq!(compute_wpa(&pts(&[3, 2, 1]), &aligned(&[1.0, 1.0, 1.0])).unwrap(), 1.0);
        let v = compute_wpa(&pts(&[3, 2, 1]), &aligned(&[1.0, 0.5, 0.0])).unwrap();
        assert!((v - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(compute_wpa(&pts(&[2, 2]), &aligned(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn pcp_examples() {
        assert_eq!(compute_pcp(&pts(&[3, 2]), &penalized(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(compute_pcp(&pts(&[3, 1]), &penalized(&[1.0, 0.0])).unwrap(), 0.75);
        assert_eq!(compute_pcp(&pts(&[1, 1, 1]), &penalized(&[1.0, 1.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn pairing_is_by_index_not_position() {
        let mut a = aligned(&[1.0, 0.0]);
        a.reverse();
        let v = compute_wpa(&pts(&[3, 1]), &a).unwrap();
        assert_eq!(v, 0.75);
    }

    #[test]
    fn pairing_errors() {
        assert!(matches!(compute_wpa(&[], &[]), Err(MetricsError::Precondition(_))));
        assert!(matches!(compute_wpa(&pts(&[1, 2]), &aligned(&[1.0])), Err(MetricsError::Pairing(_))));
        let mut a = aligned(&[1.0, 1.0]);
        a[1].point_index = 1;
        assert!(matches!(compute_wpa(&pts(&[1, 2]), &a), Err(MetricsError::Pairing(_))));
        a[1].point_index = 7;
        assert!(matches!(compute_wpa(&pts(&[1, 2]), &a), Err(MetricsError::Pairing(_))));
    }

    #[test]
    fn merge_examples() {
        let cfg = MergeConfig::default();
        assert!((compute_merge(1.0, 0.5, &cfg).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(compute_merge(0.3, 0.7, &MergeConfig::new(0.0).unwrap()).unwrap(), 0.7);
        assert_eq!(compute_merge(0.3, 0.7, &MergeConfig::new(1.0).unwrap()).unwrap(), 0.3);
        assert!(compute_merge(1.5, 0.7, &cfg).is_err());
        assert!(MergeConfig::new(1.2).is_err());
    }
}
