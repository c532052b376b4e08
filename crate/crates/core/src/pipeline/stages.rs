use std::collections::{BTreeMap, BTreeSet};

use super::config::{ErrorClassifierKind, MetricName};
use super::store::{append_jsonl, PointsRow};
use super::{Pipeline, PipelineError, StageFailure, StageReport};
use crate::analysis::{classify_error_with_judge, ErrorClassifier};
use crate::dataset::Record;
use crate::domain::{score_names, Alignment, InstanceEvaluation, ScoringPoint};
use crate::judge::{bounded_map, Judge};
use crate::metrics::{
    assess_alignment, assess_conflicts, bleu, coarse3, compute_merge, compute_pcp, compute_wpa, rouge_l, MergeConfig,
};
use crate::points::{generate_points, PointGenOptions};
use crate::star::build_pseudo_labels;
use crate::template::TemplateSet;

/// Rows are persisted after every batch of this many work items per worker.
const BATCH_PER_WORKER: usize = 8;

fn failure(stage: &str, instance_id: &str, model_id: Option<&str>, error: impl ToString) -> StageFailure {
    StageFailure {
        stage: stage.to_owned(),
        instance_id: instance_id.to_owned(),
        model_id: model_id.map(str::to_owned),
        error: error.to_string(),
    }
}

/// Checks a metric list and puts it in canonical order.
pub fn resolve_metrics(requested: &[MetricName]) -> Result<Vec<MetricName>, PipelineError> {
    let set: BTreeSet<MetricName> = requested.iter().copied().collect();
    if set.is_empty() {
        return Err(PipelineError::Config("no metrics requested".into()));
    }
    if set.contains(&MetricName::Merge) && !set.contains(&MetricName::Coarse3) {
        return Err(PipelineError::Config("merge requires coarse3 in the same metric list".into()));
    }
    if set.contains(&MetricName::Merge) && !set.contains(&MetricName::Wpa) {
        return Err(PipelineError::Config("merge requires wpa in the same metric list".into()));
    }
    Ok(set.into_iter().collect())
}

struct EvalCtx<'a> {
    judge: Option<&'a dyn Judge>,
    templates: &'a TemplateSet,
    metrics: &'a [MetricName],
    merge: MergeConfig,
    parse_retries: u32,
    bleu_max_n: usize,
    classifier: ErrorClassifier,
    judge_classifier: bool,
}

impl EvalCtx<'_> {
    fn judge(&self) -> &dyn Judge {
        self.judge.expect("judge-backed metrics are only requested with a judge")
    }

    /// Fills the metrics of `row` that are not yet present. Returns one error
    /// message per failed metric.
    fn evaluate(
        &self,
        record: &Record,
        response_idx: usize,
        points: Option<&Vec<ScoringPoint>>,
        row: &mut InstanceEvaluation,
    ) -> Vec<String> {
        let inst = &record.instance;
        let text = record.responses[response_idx].text.as_str();
        let mut errors = Vec::new();
        let missing = |row: &InstanceEvaluation, m: MetricName| !row.scores.contains_key(m.score_key());
        for &m in self.metrics {
            if !missing(row, m) {
                continue;
            }
            let outcome: Result<(), String> = match m {
                MetricName::Bleu => {
                    row.scores.insert(m.score_key().into(), bleu(text, &inst.reference_answer, self.bleu_max_n));
                    Ok(())
                }
                MetricName::RougeL => {
                    row.scores.insert(m.score_key().into(), rouge_l(text, &inst.reference_answer));
                    Ok(())
                }
                MetricName::Wpa => match points {
                    None => Err(format!("no scoring points for instance {}", inst.id)),
                    Some(points) => self.wpa(&inst.question, points, text, row),
                },
                MetricName::Pcp => match points {
                    None => Err(format!("no scoring points for instance {}", inst.id)),
                    Some(points) => assess_conflicts(
                        self.judge(),
                        &self.templates.pcp,
                        &inst.question,
                        &inst.reference_answer,
                        points,
                        text,
                        self.parse_retries,
                    )
                    .and_then(|a| Ok((compute_pcp(points, &a)?, a)))
                    .map(|(score, a)| {
                        row.scores.insert(m.score_key().into(), score);
                        row.penalty_assessments = Some(a);
                    })
                    .map_err(|e| e.to_string()),
                },
                MetricName::Coarse3 => coarse3(
                    self.judge(),
                    &self.templates.coarse3,
                    &inst.question,
                    &inst.reference_answer,
                    text,
                    self.parse_retries,
                )
                .map(|(rating, _)| {
                    row.scores.insert(m.score_key().into(), rating);
                })
                .map_err(|e| e.to_string()),
                MetricName::Merge => match (row.scores.get(score_names::COARSE3), row.scores.get(score_names::WPA)) {
                    (Some(&c), Some(&w)) => compute_merge(c, w, &self.merge)
                        .map(|v| {
                            row.scores.insert(m.score_key().into(), v);
                        })
                        .map_err(|e| e.to_string()),
                    _ => Err("merge needs both coarse3 and wpa scores".to_owned()),
                },
            };
            if let Err(e) = outcome {
                errors.push(format!("{}: {e}", m.score_key()));
            }
        }
        errors
    }

    fn wpa(
        &self,
        question: &str,
        points: &[ScoringPoint],
        text: &str,
        row: &mut InstanceEvaluation,
    ) -> Result<(), String> {
        let assessments =
            assess_alignment(self.judge(), &self.templates.wpa, question, points, text, self.parse_retries)
                .map_err(|e| e.to_string())?;
        let score = compute_wpa(points, &assessments).map_err(|e| e.to_string())?;
        let mut typed = Vec::with_capacity(assessments.len());
        for a in assessments {
            if a.alignment == Alignment::Full {
                typed.push(a);
                continue;
            }
            let t = if self.judge_classifier {
                let point = points.iter().find(|p| p.index == a.point_index).map_or("", |p| p.text.as_str());
                classify_error_with_judge(self.judge(), point, &a.explanation, self.parse_retries)
                    .map_err(|e| e.to_string())?
            } else {
                self.classifier.classify(&a.explanation)
            };
            typed.push(a.with_error_type(t));
        }
        row.scores.insert(score_names::WPA.into(), score);
        row.point_assessments = Some(typed);
        Ok(())
    }
}

impl Pipeline {
    /// Generates weighted scoring points for every instance not yet in the
    /// points store.
    pub fn extract_points(&mut self) -> Result<StageReport, PipelineError> {
        const STAGE: &str = "extract-points";
        let records = self.dataset()?;
        let done: BTreeSet<String> = self.run.load_points()?.into_keys().collect();
        let todo: Vec<&Record> = records.iter().filter(|r| !done.contains(&r.instance.id)).collect();
        let skipped = records.len() - todo.len();
        let judge = self.judge()?;
        let opts = PointGenOptions { parse_retries: self.config.parse_retries, max_points: self.config.max_points };
        let workers = self.config.judge.workers;
        let mut failures = Vec::new();
        for batch in todo.chunks(workers.max(1) * BATCH_PER_WORKER) {
            let results = bounded_map(workers, batch, |r| {
                generate_points(
                    judge.as_ref(),
                    &self.templates.points,
                    &r.instance.question,
                    &r.instance.reference_answer,
                    &opts,
                )
            });
            let mut rows = Vec::new();
            for (r, res) in batch.iter().zip(results) {
                match res {
                    Ok(points) => rows.push(PointsRow { instance_id: r.instance.id.clone(), points }),
                    Err(e) => failures.push(failure(STAGE, &r.instance.id, None, e)),
                }
            }
            append_jsonl(&self.run.points(), &rows)?;
        }
        let report = StageReport { stage: STAGE, processed: todo.len(), skipped, failures };
        self.finish_stage(&report)?;
        Ok(report)
    }

    /// Scores every response with `metrics`. Rows that already carry every
    /// requested metric are skipped; partially scored rows are completed.
    pub fn evaluate(&mut self, metrics: &[MetricName]) -> Result<StageReport, PipelineError> {
        const STAGE: &str = "evaluate";
        let metrics = resolve_metrics(metrics)?;
        let records = self.dataset()?;
        let points = self.run.load_points()?;
        let existing = self.run.load_evaluations()?;
        let needs_judge = metrics.iter().any(|m| !matches!(m, MetricName::Bleu | MetricName::RougeL));
        let judge = if needs_judge { Some(self.judge()?) } else { None };

        let mut todo = Vec::new();
        let mut skipped = 0;
        for (ri, r) in records.iter().enumerate() {
            for (si, resp) in r.responses.iter().enumerate() {
                let key = (r.instance.id.clone(), resp.model_id.clone());
                let row = existing
                    .get(&key)
                    .cloned()
                    .unwrap_or_else(|| InstanceEvaluation::new(&r.instance.id, &resp.model_id));
                if metrics.iter().all(|m| row.scores.contains_key(m.score_key())) {
                    skipped += 1;
                } else {
                    todo.push((ri, si, row));
                }
            }
        }

        let ctx = EvalCtx {
            judge: judge.as_deref(),
            templates: &self.templates,
            metrics: &metrics,
            merge: MergeConfig { lambda_m: self.config.lambda_m },
            parse_retries: self.config.parse_retries,
            bleu_max_n: self.config.bleu_max_n,
            classifier: ErrorClassifier::default(),
            judge_classifier: self.config.error_classifier == ErrorClassifierKind::Judge,
        };
        let workers = self.config.judge.workers;
        let mut failures = Vec::new();
        let processed = todo.len();
        for batch in todo.chunks(workers.max(1) * BATCH_PER_WORKER) {
            let results = bounded_map(workers, batch, |(ri, si, row)| {
                let mut row = row.clone();
                let record = &records[*ri];
                let errors = ctx.evaluate(record, *si, points.get(&record.instance.id), &mut row);
                (row, errors)
            });
            let mut rows = Vec::with_capacity(results.len());
            for (row, errors) in results {
                for e in errors {
                    failures.push(failure(STAGE, &row.instance_id, Some(&row.model_id), e));
                }
                rows.push(row);
            }
            append_jsonl(&self.run.evaluations(), &rows)?;
        }
        let report = StageReport { stage: STAGE, processed, skipped, failures };
        self.finish_stage(&report)?;
        Ok(report)
    }

    /// Builds STAR pseudo-labels for every instance without a complete set.
    pub fn star(&mut self) -> Result<StageReport, PipelineError> {
        const STAGE: &str = "star";
        let records = self.dataset()?;
        let existing = self.run.load_labels()?;
        let have: BTreeMap<&str, BTreeSet<usize>> = existing.iter().fold(BTreeMap::new(), |mut m, l| {
            m.entry(l.instance_id.as_str()).or_default().insert(l.offset);
            m
        });
        let wanted: BTreeSet<usize> = self.config.star.offsets.iter().copied().collect();
        let todo: Vec<&Record> =
            records.iter().filter(|r| have.get(r.instance.id.as_str()).is_none_or(|o| !wanted.is_subset(o))).collect();
        let skipped = records.len() - todo.len();
        let judge = self.judge()?;
        let star_cfg = crate::star::StarConfig {
            seed: self.config.seed,
            parse_retries: self.config.parse_retries,
            ..self.config.star.clone()
        };
        let workers = self.config.judge.workers;
        let mut failures = Vec::new();
        for batch in todo.chunks(workers.max(1) * BATCH_PER_WORKER) {
            let results = bounded_map(workers, batch, |r| {
                build_pseudo_labels(judge.as_ref(), &self.templates.rank, &r.instance, &r.responses, &star_cfg)
            });
            let mut rows = Vec::new();
            for (r, res) in batch.iter().zip(results) {
                match res {
                    Ok(labels) => rows.extend(labels),
                    Err(e) => failures.push(failure(STAGE, &r.instance.id, None, e)),
                }
            }
            append_jsonl(&self.run.labels(), &rows)?;
        }
        let report = StageReport { stage: STAGE, processed: todo.len(), skipped, failures };
        self.finish_stage(&report)?;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_resolution() {
        use MetricName::*;
        assert_eq!(resolve_metrics(&[RougeL, Wpa, Wpa]).unwrap(), [Wpa, RougeL]);
        assert!(matches!(resolve_metrics(&[Merge, Wpa]), Err(PipelineError::Config(_))));
        assert!(resolve_metrics(&[]).is_err());
        assert!(resolve_metrics(&[Merge, Coarse3, Wpa]).is_ok());
    }
}
