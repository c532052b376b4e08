use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::correlation::{pseudo_quality, selected_scores, spearman, CorrelationError};
use super::{AnalysisError, ScoreTable};
use crate::star::StratifiedRanking;

/// Response lengths in characters, keyed by instance then model.
pub type LengthTable = BTreeMap<String, BTreeMap<String, usize>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub mean: f64,
    pub max: f64,
}

impl BoxStats {
    /// Quartiles use linear interpolation between order statistics.
    pub fn of(values: &[f64]) -> Option<BoxStats> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(BoxStats {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBin {
    pub lower: f64,
    pub upper: f64,
    /// Labelled sets whose mean response length falls in the bin.
    pub count: usize,
    /// Spearman distribution over the bin's defined samples.
    pub stats: Option<BoxStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBinReport {
    pub metric_name: String,
    pub bins: Vec<LengthBin>,
}

/// `num_bins + 1` equal-width edges over `[min, max]`.
pub fn bin_edges(min: f64, max: f64, num_bins: usize) -> Vec<f64> {
    let width = (max - min) / num_bins as f64;
    (0..=num_bins).map(|i| if i == num_bins { max } else { min + width * i as f64 }).collect()
}

/// Bin of `x` among `edges`; the upper edge belongs to the last bin and a
/// zero-width range puts everything in bin 0.
pub fn bin_of(x: f64, edges: &[f64]) -> usize {
    let bins = edges.len() - 1;
    let (min, max) = (edges[0], edges[bins]);
    if max <= min {
        return 0;
    }
    (((x - min) / (max - min) * bins as f64).floor() as usize).min(bins - 1)
}

/// Groups labelled sets by the mean character length of their selected
/// responses and summarizes per-set Spearman correlation within each bin.
pub fn length_bins(
    metric_name: &str,
    scores: &ScoreTable,
    lengths: &LengthTable,
    labels: &[StratifiedRanking],
    num_bins: usize,
    higher_is_better: bool,
) -> Result<LengthBinReport, AnalysisError> {
    if num_bins == 0 {
        return Err(AnalysisError::Precondition("num_bins must be at least 1".into()));
    }
    let mut samples = Vec::with_capacity(labels.len());
    for label in labels {
        let mut s = selected_scores(scores, label)?;
        if !higher_is_better {
            s.iter_mut().for_each(|v| *v = -*v);
        }
        let total: usize = label
            .selected_model_ids
            .iter()
            .map(|m| {
                lengths.get(&label.instance_id).and_then(|r| r.get(m)).copied().ok_or_else(|| {
                    AnalysisError::MissingLength { instance_id: label.instance_id.clone(), model_id: m.clone() }
                })
            })
            .sum::<Result<usize, _>>()?;
        let mean_len = total as f64 / label.selected_model_ids.len().max(1) as f64;
        let rho = match spearman(&s, &pseudo_quality(s.len())) {
            Ok(r) => Some(r),
            Err(CorrelationError::Undefined) => None,
            Err(e) => return Err(AnalysisError::Correlation(e)),
        };
        samples.push((mean_len, rho));
    }
    if samples.is_empty() {
        return Ok(LengthBinReport { metric_name: metric_name.to_owned(), bins: Vec::new() });
    }
    let min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let max = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let edges = bin_edges(min, max, num_bins);
    let mut members: Vec<(usize, Vec<f64>)> = vec![(0, Vec::new()); num_bins];
    for (len, rho) in samples {
        let b = bin_of(len, &edges);
        members[b].0 += 1;
        members[b].1.extend(rho);
    }
    let bins = members
        .into_iter()
        .enumerate()
        .map(|(i, (count, rhos))| LengthBin { lower: edges[i], upper: edges[i + 1], count, stats: BoxStats::of(&rhos) })
        .collect();
    Ok(LengthBinReport { metric_name: metric_name.to_owned(), bins })
}
