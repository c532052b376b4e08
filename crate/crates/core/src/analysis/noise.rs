use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::correlation::{kendall, selected_scores, CorrelationError};
use super::{normalize_scores, AnalysisError, ScoreTable};
use crate::rng::substream;
use crate::star::StratifiedRanking;

pub const DEFAULT_SIGMA_GRID: [f64; 7] = [0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRobustnessCurve {
    pub metric_name: String,
    pub sigma_grid: Vec<f64>,
    pub mean_kendall_vs_original: Vec<f64>,
    pub seed: u64,
    /// Labelled sets whose noiseless scores are all equal; they carry no
    /// ordering and are left out of every mean.
    pub excluded: usize,
}

/// Mean Kendall τ between noisy and noiseless scores of each labelled set,
/// for each σ. Scores are normalized to `[0, 1]` across all selected
/// responses before noise is added.
pub fn noise_robustness(
    metric_name: &str,
    scores: &ScoreTable,
    labels: &[StratifiedRanking],
    sigma_grid: &[f64],
    seed: u64,
) -> Result<NoiseRobustnessCurve, AnalysisError> {
    if !sigma_grid.contains(&0.0) {
        return Err(AnalysisError::Precondition("sigma grid must contain 0".into()));
    }
    if let Some(s) = sigma_grid.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(AnalysisError::Precondition(format!("invalid sigma {s}")));
    }
    let mut flat = Vec::new();
    let mut sizes = Vec::with_capacity(labels.len());
    for label in labels {
        let s = selected_scores(scores, label)?;
        sizes.push(s.len());
        flat.extend(s);
    }
    let flat = normalize_scores(&flat);
    let mut samples = Vec::with_capacity(labels.len());
    let mut start = 0;
    for (label, len) in labels.iter().zip(sizes) {
        samples.push((label, &flat[start..start + len]));
        start += len;
    }
    let usable: Vec<_> = samples.into_iter().filter(|(_, s)| s.iter().any(|v| *v != s[0])).collect();
    let excluded = labels.len() - usable.len();
    if usable.is_empty() {
        return Err(AnalysisError::Precondition(format!("{metric_name}: every labelled set has constant scores")));
    }

    let mut curve = Vec::with_capacity(sigma_grid.len());
    for (k, &sigma) in sigma_grid.iter().enumerate() {
        let mut sum = 0.0;
        for (label, original) in &usable {
            let mut rng = substream(seed, &["noise", &label.instance_id, &label.offset.to_string(), &k.to_string()]);
            let noisy: Vec<f64> = original
                .iter()
                .map(|v| {
                    let z: f64 = rng.sample(StandardNormal);
                    v + sigma * z
                })
                .collect();
            sum += match kendall(&noisy, original) {
                Ok(t) => t,
                Err(CorrelationError::Undefined) => 0.0,
                Err(e) => return Err(AnalysisError::Correlation(e)),
            };
        }
        curve.push(sum / usable.len() as f64);
    }
    Ok(NoiseRobustnessCurve {
        metric_name: metric_name.to_owned(),
        sigma_grid: sigma_grid.to_vec(),
        mean_kendall_vs_original: curve,
        seed,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::score_table;

    fn labels(n: usize) -> Vec<StratifiedRanking> {
        (0..n)
            .map(|i| StratifiedRanking {
                instance_id: format!("i{i}"),
                offset: 1,
                selected_model_ids: vec!["a".into(), "b".into(), "c".into()],
                selected_indices: vec![0, 4, 8],
            })
            .collect()
    }

    fn table(n: usize, values: [f64; 3]) -> ScoreTable {
        let ids: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
        score_table(
            ids.iter().flat_map(|id| {
                [("a", values[0]), ("b", values[1]), ("c", values[2])].map(|(m, v)| (id.as_str(), m, v))
            }),
        )
    }

    #[test]
    fn zero_sigma_is_exactly_one_and_grid_length_kept() {
        let t = table(4, [0.9, 0.3, 0.6]);
        let c = noise_robustness("X", &t, &labels(4), &DEFAULT_SIGMA_GRID, 7).unwrap();
        assert_eq!(c.mean_kendall_vs_original.len(), 7);
        assert_eq!(c.mean_kendall_vs_original[0], 1.0);
        assert_eq!(c, noise_robustness("X", &t, &labels(4), &DEFAULT_SIGMA_GRID, 7).unwrap());
    }

    #[test]
    fn wide_gaps_survive_small_noise() {
        let t = table(20, [1.0, 0.5, 0.0]);
        let c = noise_robustness("X", &t, &labels(20), &DEFAULT_SIGMA_GRID, 3).unwrap();
        assert_eq!(c.mean_kendall_vs_original[1], 1.0);
        assert!(c.mean_kendall_vs_original[6] < 1.0 + 1e-12);
    }

    #[test]
    fn preconditions() {
        let t = table(2, [0.5, 0.5, 0.5]);
        assert!(noise_robustness("X", &t, &labels(2), &[0.0, 0.1], 0).is_err());
        let t = table(2, [0.1, 0.5, 0.9]);
        assert!(noise_robustness("X", &t, &labels(2), &[0.1], 0).is_err());
        assert!(noise_robustness("X", &t, &labels(2), &[0.0, -0.1], 0).is_err());
    }
}
