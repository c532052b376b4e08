use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, ScoreTable};
use crate::star::StratifiedRanking;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum CorrelationError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("correlation undefined: an input has zero variance")]
    Undefined,
}

fn check(x: &[f64], y: &[f64]) -> Result<(), CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(CorrelationError::TooShort(x.len()));
    }
    Ok(())
}

/// 1-based ranks; tied values share the mean of the positions they span.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's ρ as the Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    check(x, y)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let mean = (x.len() as f64 + 1.0) / 2.0;
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(CorrelationError::Undefined);
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Kendall's τ-b: `(C − D) / sqrt((n₀ − n₁)(n₀ − n₂))`.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    check(x, y)?;
    let n = x.len();
    let (mut concordant, mut discordant, mut tied_x, mut tied_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let sx = x[i].total_cmp(&x[j]);
            let sy = y[i].total_cmp(&y[j]);
            // Pairs tied in both inputs count towards both tie totals.
            if x[i] == x[j] {
                tied_x += 1;
            }
            if y[i] == y[j] {
                tied_y += 1;
            }
            if x[i] == x[j] || y[i] == y[j] {
                continue;
            }
            if sx == sy {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let (px, py) = (n0 - tied_x, n0 - tied_y);
    if px == 0 || py == 0 {
        return Err(CorrelationError::Undefined);
    }
    let denom = if px == py { px as f64 } else { ((px as f64) * (py as f64)).sqrt() };
    Ok(((concordant - discordant) as f64 / denom).clamp(-1.0, 1.0))
}

/// Correlations of one labelled set. `None` marks an undefined value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSample {
    pub instance_id: String,
    pub offset: usize,
    pub spearman: Option<f64>,
    pub kendall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub metric_name: String,
    pub per_instance: Vec<CorrelationSample>,
    /// Mean over defined samples; `None` when no sample is defined.
    pub mean_spearman: Option<f64>,
    pub mean_kendall: Option<f64>,
    pub sample_count: usize,
    pub excluded_spearman: usize,
    pub excluded_kendall: usize,
}

/// Scores of the selected responses of `label`, best-ranked first.
pub fn selected_scores(scores: &ScoreTable, label: &StratifiedRanking) -> Result<Vec<f64>, AnalysisError> {
    label
        .selected_model_ids
        .iter()
        .map(|m| {
            scores.get(&label.instance_id).and_then(|row| row.get(m)).copied().ok_or_else(|| {
                AnalysisError::MissingScore { instance_id: label.instance_id.clone(), model_id: m.clone() }
            })
        })
        .collect()
}

/// `[L, L − 1, …, 1]`: larger means better.
pub fn pseudo_quality(len: usize) -> Vec<f64> {
    (0..len).map(|i| (len - i) as f64).collect()
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let (mut sum, mut n, mut excluded) = (0.0, 0usize, 0usize);
    for v in values {
        match v {
            Some(v) => {
                sum += v;
                n += 1;
            }
            None => excluded += 1,
        }
    }
    ((n > 0).then(|| sum / n as f64), excluded)
}

fn defined(r: Result<f64, CorrelationError>) -> Result<Option<f64>, AnalysisError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(CorrelationError::Undefined) => Ok(None),
        Err(e) => Err(AnalysisError::Correlation(e)),
    }
}

/// Correlates a metric with the pseudo-ranking of every labelled set, then
/// averages over sets. Scores are negated when lower is better.
pub fn instance_level_correlation(
    metric_name: &str,
    scores: &ScoreTable,
    labels: &[StratifiedRanking],
    higher_is_better: bool,
) -> Result<CorrelationReport, AnalysisError> {
    let mut per_instance = Vec::with_capacity(labels.len());
    for label in labels {
        let mut s = selected_scores(scores, label)?;
        if !higher_is_better {
            s.iter_mut().for_each(|v| *v = -*v);
        }
        let q = pseudo_quality(s.len());
        per_instance.push(CorrelationSample {
            instance_id: label.instance_id.clone(),
            offset: label.offset,
            spearman: defined(spearman(&s, &q))?,
            kendall: defined(kendall(&s, &q))?,
        });
    }
    let (mean_spearman, excluded_spearman) = mean_defined(per_instance.iter().map(|s| s.spearman));
    let (mean_kendall, excluded_kendall) = mean_defined(per_instance.iter().map(|s| s.kendall));
    Ok(CorrelationReport {
        metric_name: metric_name.to_owned(),
        sample_count: per_instance.len(),
        per_instance,
        mean_spearman,
        mean_kendall,
        excluded_spearman,
        excluded_kendall,
    })
}

/// Builds a score table from `(instance_id, model_id, score)` triples.
pub fn score_table<'a>(rows: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> ScoreTable {
    let mut t: ScoreTable = BTreeMap::new();
    for (i, m, v) in rows {
        t.entry(i.to_owned()).or_default().insert(m.to_owned(), v);
    }
    t
}
