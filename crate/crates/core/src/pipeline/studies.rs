use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{MetricName, Study};
use super::{Pipeline, PipelineError};
use crate::analysis::{
    disturb_weights, error_by_alignment, error_distribution, error_records, instance_level_correlation, length_bins,
    noise_robustness, normalize_scores, scale_reduce, AnalysisError, BoxStats, CorrelationReport, ErrorClassifier,
    ErrorRecord, GroupBy, LengthTable, ScoreTable, WeightMode,
};
use crate::domain::{score_names, Alignment, InstanceEvaluation, PointAssessment, ScoringPoint};
use crate::metrics::compute_wpa;
use crate::rng::stable_hash;
use crate::star::StratifiedRanking;

pub(super) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), PipelineError> {
    let to_err = |e: csv::Error| PipelineError::Io { path: path.to_owned(), source: std::io::Error::other(e) };
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    w.write_record(header).map_err(to_err)?;
    for r in rows {
        w.write_record(r).map_err(to_err)?;
    }
    w.flush().map_err(|e| PipelineError::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(|e| PipelineError::io(path, e))
}

/// Metric name → score table, for every metric present in the rows.
fn score_tables(evals: &BTreeMap<(String, String), InstanceEvaluation>) -> BTreeMap<MetricName, ScoreTable> {
    let mut out: BTreeMap<MetricName, ScoreTable> = BTreeMap::new();
    for e in evals.values() {
        for (k, &v) in &e.scores {
            if let Some(m) = MetricName::from_score_key(k) {
                out.entry(m).or_default().entry(e.instance_id.clone()).or_default().insert(e.model_id.clone(), v);
            }
        }
    }
    out
}

#[derive(Serialize)]
struct Skipped {
    metric: String,
    reason: String,
}

#[derive(Serialize)]
struct VariantSummary<'a> {
    variant: &'a str,
    mean_spearman: Option<f64>,
    mean_kendall: Option<f64>,
    sample_count: usize,
    excluded_spearman: usize,
    excluded_kendall: usize,
}

fn summary_row(r: &CorrelationReport) -> Vec<String> {
    vec![
        r.metric_name.clone(),
        fmt_opt(r.mean_spearman),
        fmt_opt(r.mean_kendall),
        r.sample_count.to_string(),
        r.excluded_spearman.to_string(),
        r.excluded_kendall.to_string(),
    ]
}

const SUMMARY_HEADER: [&str; 6] =
    ["variant", "mean_spearman", "mean_kendall", "sample_count", "excluded_spearman", "excluded_kendall"];

struct Inputs {
    evals: BTreeMap<(String, String), InstanceEvaluation>,
    tables: BTreeMap<MetricName, ScoreTable>,
    labels: Vec<StratifiedRanking>,
    points: BTreeMap<String, Vec<ScoringPoint>>,
}

impl Inputs {
    fn require_labels(&self) -> Result<&[StratifiedRanking], PipelineError> {
        if self.labels.is_empty() {
            return Err(PipelineError::MissingInput(format!("{} is empty; run the star stage", super::LABELS_FILE)));
        }
        Ok(&self.labels)
    }

    /// WPA recomputed by `f` from stored point judgements; rows without
    /// judgements or points are left out.
    fn wpa_variant(
        &self,
        f: impl Fn(&str, &[ScoringPoint], &[PointAssessment]) -> Result<f64, AnalysisError>,
    ) -> Result<ScoreTable, PipelineError> {
        let mut t = ScoreTable::new();
        for ((inst, model), e) in &self.evals {
            let (Some(points), Some(assessments)) = (self.points.get(inst), e.point_assessments.as_ref()) else {
                continue;
            };
            t.entry(inst.clone()).or_default().insert(model.clone(), f(inst, points, assessments)?);
        }
        Ok(t)
    }
}

impl Pipeline {
    /// Runs `studies` over the stored evaluations and labels and writes their
    /// reports. Returns the files written.
    pub fn analyze(&mut self, studies: &[Study]) -> Result<Vec<PathBuf>, PipelineError> {
        let evals = self.run.load_evaluations()?;
        if evals.is_empty() {
            return Err(PipelineError::MissingInput(format!(
                "{} is empty; run the evaluate stage",
                super::EVALUATIONS_FILE
            )));
        }
        let inputs = Inputs {
            tables: score_tables(&evals),
            evals,
            labels: self.run.load_labels()?,
            points: self.run.load_points()?,
        };
        let mut studies = studies.to_vec();
        studies.sort();
        studies.dedup();
        let mut written = Vec::new();
        for study in studies {
            match study {
                Study::Correlation => written.extend(self.study_correlation(&inputs)?),
                Study::AblationScale => written.extend(self.study_ablation_scale(&inputs)?),
                Study::AblationWeights => written.extend(self.study_ablation_weights(&inputs)?),
                Study::Noise => written.extend(self.study_noise(&inputs)?),
                Study::LengthBins => written.extend(self.study_length_bins(&inputs)?),
                Study::Errors => written.extend(self.study_errors(&inputs)?),
            }
        }
        let report =
            super::StageReport { stage: "analyze", processed: written.len(), skipped: 0, failures: Vec::new() };
        self.finish_stage(&report)?;
        Ok(written)
    }

    fn study_correlation(&self, inp: &Inputs) -> Result<Vec<PathBuf>, PipelineError> {
        let labels = inp.require_labels()?;
        let mut reports = Vec::new();
        let mut rows = Vec::new();
        let mut dist = Vec::new();
        for (&metric, table) in &inp.tables {
            let r = instance_level_correlation(metric.score_key(), table, labels, metric.higher_is_better())?;
            for s in &r.per_instance {
                rows.push(vec![
                    r.metric_name.clone(),
                    s.instance_id.clone(),
                    s.offset.to_string(),
                    fmt_opt(s.spearman),
                    fmt_opt(s.kendall),
                ]);
            }
            reports.push(r);
            let flat: Vec<(&String, &String, f64)> =
                table.iter().flat_map(|(i, row)| row.iter().map(move |(m, &v)| (i, m, v))).collect();
            let norm = normalize_scores(&flat.iter().map(|x| x.2).collect::<Vec<_>>());
            for ((i, m, v), n) in flat.into_iter().zip(norm) {
                dist.push(vec![metric.score_key().to_owned(), i.clone(), m.clone(), fmt_f64(v), fmt_f64(n)]);
            }
        }
        let dir = self.run.reports();
        let files = [dir.join("correlation.csv"), dir.join("correlation.json"), dir.join("score_distribution.csv")];
        write_csv(&files[0], &["metric", "instance_id", "offset", "spearman", "kendall"], &rows)?;
        write_json(&files[1], &reports)?;
        write_csv(&files[2], &["metric", "instance_id", "model_id", "score", "normalized"], &dist)?;
        Ok(files.to_vec())
    }

    fn write_variants(&self, name: &str, reports: &[CorrelationReport]) -> Result<Vec<PathBuf>, PipelineError> {
        let dir = self.run.reports();
        let csv_path = dir.join(format!("{name}.csv"));
        let json_path = dir.join(format!("{name}.json"));
        write_csv(&csv_path, &SUMMARY_HEADER, &reports.iter().map(summary_row).collect::<Vec<_>>())?;
        let summaries: Vec<VariantSummary> = reports
            .iter()
            .map(|r| VariantSummary {
                variant: &r.metric_name,
                mean_spearman: r.mean_spearman,
                mean_kendall: r.mean_kendall,
                sample_count: r.sample_count,
                excluded_spearman: r.excluded_spearman,
                excluded_kendall: r.excluded_kendall,
            })
            .collect();
        write_json(&json_path, &summaries)?;
        Ok(vec![csv_path, json_path])
    }

    fn study_ablation_scale(&self, inp: &Inputs) -> Result<Vec<PathBuf>, PipelineError> {
        let labels = inp.require_labels()?;
        let mut reports = Vec::new();
        if let Some(coarse) = inp.tables.get(&MetricName::Coarse3) {
            reports.push(instance_level_correlation("Coarse3", coarse, labels, true)?);
            let mut reduced = ScoreTable::new();
            for (i, row) in coarse {
                for (m, &v) in row {
                    reduced.entry(i.clone()).or_default().insert(m.clone(), scale_reduce("coarse3", v)?);
                }
            }
            reports.push(instance_level_correlation("Coarse3_two_level", &reduced, labels, true)?);
        }
        if inp.tables.contains_key(&MetricName::Wpa) {
            let original = inp.wpa_variant(|_, p, a| Ok(compute_wpa(p, a)?))?;
            let two_level = inp.wpa_variant(|_, p, a| {
                let reduced: Vec<PointAssessment> = a
                    .iter()
                    .map(|x| {
                        let v = scale_reduce("wpa_match", x.alignment.value())?;
                        let alignment = Alignment::from_value(v).map_err(|e| AnalysisError::Mapping(e.to_string()))?;
                        Ok(PointAssessment { alignment, ..x.clone() })
                    })
                    .collect::<Result<_, AnalysisError>>()?;
                Ok(compute_wpa(p, &reduced)?)
            })?;
            reports.push(instance_level_correlation(score_names::WPA, &original, labels, true)?);
            reports.push(instance_level_correlation("WPA_two_level", &two_level, labels, true)?);
        }
        if reports.is_empty() {
            return Err(PipelineError::MissingInput("ablation_scale needs Coarse3 or WPA scores".into()));
        }
        self.write_variants("ablation_scale", &reports)
    }

    fn study_ablation_weights(&self, inp: &Inputs) -> Result<Vec<PathBuf>, PipelineError> {
        let labels = inp.require_labels()?;
        if !inp.tables.contains_key(&MetricName::Wpa) {
            return Err(PipelineError::MissingInput("ablation_weights needs WPA scores".into()));
        }
        let seed = self.config.seed;
        let original = inp.wpa_variant(|_, p, a| Ok(compute_wpa(p, a)?))?;
        let equal = inp.wpa_variant(|_, p, a| Ok(compute_wpa(&disturb_weights(p, WeightMode::Equal, seed)?, a)?))?;
        let random = inp.wpa_variant(|inst, p, a| {
            let s = stable_hash(&[&seed.to_string(), inst]);
            Ok(compute_wpa(&disturb_weights(p, WeightMode::Random, s)?, a)?)
        })?;
        let reports = vec![
            instance_level_correlation(score_names::WPA, &original, labels, true)?,
            instance_level_correlation("WPA_equal_weights", &equal, labels, true)?,
            instance_level_correlation("WPA_random_weights", &random, labels, true)?,
        ];
        self.write_variants("ablation_weights", &reports)
    }

    fn study_noise(&self, inp: &Inputs) -> Result<Vec<PathBuf>, PipelineError> {
        let labels = inp.require_labels()?;
        let mut curves = Vec::new();
        let mut skipped = Vec::new();
        let mut rows = Vec::new();
        for (&metric, table) in &inp.tables {
            // Lower-is-better scores are negated so every curve compares orderings
            // in the same direction.
            let oriented: ScoreTable = if metric.higher_is_better() {
                table.clone()
            } else {
                table.iter().map(|(i, r)| (i.clone(), r.iter().map(|(m, v)| (m.clone(), -v)).collect())).collect()
            };
            match noise_robustness(metric.score_key(), &oriented, labels, &self.config.sigma_grid, self.config.seed) {
                Ok(c) => {
                    for (s, t) in c.sigma_grid.iter().zip(&c.mean_kendall_vs_original) {
                        rows.push(vec![c.metric_name.clone(), fmt_f64(*s), fmt_f64(*t)]);
                    }
                    curves.push(c);
                }
                Err(AnalysisError::Precondition(reason)) => {
                    log::warn!("noise study skips {}: {reason}", metric.score_key());
                    skipped.push(Skipped { metric: metric.score_key().to_owned(), reason });
                }
                Err(e) => return Err(e.into()),
            }
        }
        let dir = self.run.reports();
        let files = [dir.join("noise_curves.csv"), dir.join("noise_curves.json")];
        write_csv(&files[0], &["metric", "sigma", "mean_kendall"], &rows)?;
        write_json(&files[1], &serde_json::json!({ "curves": curves, "skipped": skipped }))?;
        Ok(files.to_vec())
    }

    fn study_length_bins(&self, inp: &Inputs) -> Result<Vec<PathBuf>, PipelineError> {
        let labels = inp.require_labels()?;
        let records = self.dataset()?;
        let mut lengths = LengthTable::new();
        for r in &records {
            let row = lengths.entry(r.instance.id.clone()).or_default();
            for resp in &r.responses {
                row.insert(resp.model_id.clone(), resp.char_length);
            }
        }
        let mut reports = Vec::new();
        let mut rows = Vec::new();
        for (&metric, table) in &inp.tables {
            let r = length_bins(
                metric.score_key(),
                table,
                &lengths,
                labels,
                self.config.num_bins,
                metric.higher_is_better(),
            )?;
            for (i, b) in r.bins.iter().enumerate() {
                let s = b.stats.as_ref();
                let mut row =
                    vec![r.metric_name.clone(), i.to_string(), fmt_f64(b.lower), fmt_f64(b.upper), b.count.to_string()];
                let fields: [fn(&BoxStats) -> f64; 6] =
                    [|s| s.min, |s| s.q1, |s| s.median, |s| s.q3, |s| s.mean, |s| s.max];
                for f in fields {
                    row.push(fmt_opt(s.map(f)));
                }
                rows.push(row);
            }
            reports.push(r);
        }
        let dir = self.run.reports();
        let files = [dir.join("length_bins.csv"), dir.join("length_bins.json")];
        write_csv(
            &files[0],
            &["metric", "bin", "lower", "upper", "count", "min", "q1", "median", "q3", "mean", "max"],
            &rows,
        )?;
        write_json(&files[1], &reports)?;
        Ok(files.to_vec())
    }

    fn study_errors(&self, inp: &Inputs) -> Result<Vec<PathBuf>, PipelineError> {
        let datasets: BTreeMap<String, String> = match self.config.dataset {
            Some(_) => self.dataset()?.into_iter().map(|r| (r.instance.id, r.instance.dataset)).collect(),
            None => BTreeMap::new(),
        };
        let classifier = ErrorClassifier::default();
        let records: Vec<ErrorRecord> = inp
            .evals
            .values()
            .flat_map(|e| {
                let ds = datasets.get(&e.instance_id).map_or("", String::as_str);
                error_records(e, ds, &classifier)
            })
            .collect();
        let by_model = error_distribution(&records, GroupBy::Model);
        let by_dataset = error_distribution(&records, GroupBy::Dataset);
        let by_alignment = error_by_alignment(&records);
        let table_rows = |t: &BTreeMap<String, BTreeMap<crate::domain::ErrorType, f64>>| -> Vec<Vec<String>> {
            t.iter()
                .flat_map(|(g, row)| row.iter().map(move |(et, p)| vec![g.clone(), et.to_string(), fmt_f64(*p)]))
                .collect()
        };
        let align_rows: Vec<Vec<String>> =
            by_alignment.iter().map(|((t, a), c)| vec![t.to_string(), fmt_f64(a.value()), c.to_string()]).collect();
        let dir = self.run.reports();
        let files = [
            dir.join("error_distribution_model.csv"),
            dir.join("error_distribution_dataset.csv"),
            dir.join("error_by_alignment.csv"),
            dir.join("errors.json"),
        ];
        write_csv(&files[0], &["model_id", "error_type", "proportion"], &table_rows(&by_model))?;
        write_csv(&files[1], &["dataset", "error_type", "proportion"], &table_rows(&by_dataset))?;
        write_csv(&files[2], &["error_type", "alignment", "count"], &align_rows)?;
        let crosstab: Vec<serde_json::Value> = by_alignment
            .iter()
            .map(|((t, a), c)| serde_json::json!({"error_type": t, "alignment": a, "count": c}))
            .collect();
        write_json(
            &files[3],
            &serde_json::json!({
                "record_count": records.len(),
                "by_model": by_model,
                "by_dataset": by_dataset,
                "by_alignment": crosstab,
                "records": records,
            }),
        )?;
        Ok(files.to_vec())
    }
}
