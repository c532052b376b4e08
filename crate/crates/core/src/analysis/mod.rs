//! Correlation studies, ablations, robustness curves and error attribution.
//!
//! Scores are passed around as a [`ScoreTable`] (instance id → model id →
//! score) and compared with STAR pseudo-labels one labelled set at a time.

mod ablation;
mod correlation;
mod errors;
mod length;
mod noise;
pub mod simulation;

use std::collections::BTreeMap;

use thiserror::Error;

pub use ablation::{disturb_weights, normalize_scores, scale_reduce, RatingScale, WeightMode};
pub use correlation::{
    average_ranks, instance_level_correlation, kendall, pseudo_quality, score_table, selected_scores, spearman,
    CorrelationError, CorrelationReport, CorrelationSample,
};
pub use errors::{
    classify_error, classify_error_with_judge, error_by_alignment, error_distribution, error_records, ErrorClassifier,
    ErrorRecord, GroupBy,
};
pub use length::{bin_edges, bin_of, length_bins, BoxStats, LengthBin, LengthBinReport, LengthTable};
pub use noise::{noise_robustness, NoiseRobustnessCurve, DEFAULT_SIGMA_GRID};

use crate::judge::JudgeError;

pub type ScoreTable = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no score for model {model_id} on instance {instance_id}")]
    MissingScore { instance_id: String, model_id: String },
    #[error("no response length for model {model_id} on instance {instance_id}")]
    MissingLength { instance_id: String, model_id: String },
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error("mapping error: {0}")]
    Mapping(String),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}
