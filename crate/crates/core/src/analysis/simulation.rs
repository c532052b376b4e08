//! Synthetic judge study.
//!
//! Each response has a latent quality `q ~ U(0, 1)`. A point-wise judge sees
//! `q + ε` independently for every scoring point and quantizes it to an
//! alignment degree; a holistic three-level judge sees a single `q + ε` and
//! quantizes it the same way. Pseudo-labels come from the true qualities.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{instance_level_correlation, score_table, AnalysisError, CorrelationReport};
use crate::domain::{Alignment, PointAssessment, ScoringPoint};
use crate::metrics::compute_wpa;
use crate::rng::substream;
use crate::star::{select_from_ranking, StarConfig, StratifiedRanking};
use crate::GeneratedResponse;

pub const DEFAULT_SIMULATION_SEED: u64 = 20240917;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub instances: usize,
    pub responses: usize,
    pub min_points: usize,
    pub max_points: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            instances: 200,
            responses: 10,
            min_points: 3,
            max_points: 8,
            noise_sd: 0.15,
            seed: DEFAULT_SIMULATION_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub wpa: CorrelationReport,
    pub wpa_equal_weights: CorrelationReport,
    pub coarse3: CorrelationReport,
}

fn quantize(x: f64) -> Alignment {
    if x > 2.0 / 3.0 {
        Alignment::Full
    } else if x > 1.0 / 3.0 {
        Alignment::Partial
    } else {
        Alignment::None
    }
}

pub fn simulate(cfg: &SimulationConfig) -> Result<SimulationReport, AnalysisError> {
    if cfg.min_points == 0 || cfg.min_points > cfg.max_points || cfg.responses < 3 {
        return Err(AnalysisError::Precondition("invalid simulation configuration".into()));
    }
    let noise = Normal::new(0.0, cfg.noise_sd)
        .map_err(|e| AnalysisError::Precondition(format!("noise_sd {}: {e}", cfg.noise_sd)))?;
    let star = StarConfig { expected_candidates: cfg.responses, ..StarConfig::default() };
    let mut rows_wpa = Vec::new();
    let mut rows_equal = Vec::new();
    let mut rows_coarse = Vec::new();
    let mut labels: Vec<StratifiedRanking> = Vec::new();
    let ids: Vec<String> = (0..cfg.instances).map(|i| format!("sim-{i:04}")).collect();
    let models: Vec<String> = (0..cfg.responses).map(|j| format!("model-{j:02}")).collect();

    for id in &ids {
        let mut rng = substream(cfg.seed, &["simulation", id]);
        let k = rng.random_range(cfg.min_points..=cfg.max_points);
        let points: Vec<ScoringPoint> = (0..k)
            .map(|i| ScoringPoint::new(i as u32 + 1, format!("point {}", i + 1), rng.random_range(1..=3)))
            .collect::<Result<_, _>>()
            .expect("weights in range");
        let equal: Vec<ScoringPoint> = points.iter().map(|p| ScoringPoint { weight: 1, ..p.clone() }).collect();
        let quality: Vec<f64> = (0..cfg.responses).map(|_| rng.random::<f64>()).collect();
        for (j, &q) in quality.iter().enumerate() {
            let assessments: Vec<PointAssessment> = points
                .iter()
                .map(|p| PointAssessment::new(p.index, quantize(q + noise.sample(&mut rng)), ""))
                .collect();
            let coarse = quantize(q + noise.sample(&mut rng)).value();
            rows_wpa.push((id.as_str(), models[j].as_str(), compute_wpa(&points, &assessments)?));
            rows_equal.push((id.as_str(), models[j].as_str(), compute_wpa(&equal, &assessments)?));
            rows_coarse.push((id.as_str(), models[j].as_str(), coarse));
        }
        let mut sorted: Vec<usize> = (0..cfg.responses).collect();
        sorted.sort_by(|&a, &b| quality[b].total_cmp(&quality[a]));
        let responses: Vec<GeneratedResponse> = models.iter().map(|m| GeneratedResponse::new(m.clone(), "")).collect();
        labels.extend(
            select_from_ranking(id, &responses, &sorted, &star)
                .map_err(|e| AnalysisError::Precondition(e.to_string()))?,
        );
    }

    Ok(SimulationReport {
        config: cfg.clone(),
        wpa: instance_level_correlation("WPA", &score_table(rows_wpa), &labels, true)?,
        wpa_equal_weights: instance_level_correlation("WPA_equal", &score_table(rows_equal), &labels, true)?,
        coarse3: instance_level_correlation("Coarse3", &score_table(rows_coarse), &labels, true)?,
    })
}
