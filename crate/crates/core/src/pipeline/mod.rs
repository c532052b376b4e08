//! Staged, resumable pipeline behind the `scorepoint` binary.
//!
//! A run directory holds the append-only stores (`points.jsonl`,
//! `evaluations.jsonl`, `labels.jsonl`), `manifest.json`, and `reports/`.
//! Each stage skips work already present in its store, so an interrupted run
//! can be restarted with the same command.

mod config;
mod manifest;
mod report;
mod stages;
mod store;
mod studies;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::Utc;
use thiserror::Error;

pub use config::{parse_list, ErrorClassifierKind, JudgeBackend, MetricName, RunConfig, Study, TemplatePaths};
pub use manifest::{RunManifest, StageFailure};
pub use store::{append_jsonl, read_jsonl, PointsRow, RunDir, EVALUATIONS_FILE, LABELS_FILE, POINTS_FILE, REPORTS_DIR};

use crate::dataset::{load_dataset, DatasetError, DatasetFormat, Record};
use crate::judge::{CacheError, CachedJudge, HttpJudge, Judge, JudgeError, MockJudge, ResponseCache};
use crate::rng::stable_hash;
use crate::template::TemplateSet;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {reason}")]
    Store { path: PathBuf, line: usize, reason: String },
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_owned(), source }
    }
}

/// Summary of one stage invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageReport {
    pub stage: &'static str,
    pub processed: usize,
    pub skipped: usize,
    pub failures: Vec<StageFailure>,
}

impl StageReport {
    /// 0 on success, 2 when some instances failed.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

/// Judge selected by the configuration, wrapped in the on-disk cache when a
/// cache directory is set.
pub fn build_judge(cfg: &RunConfig) -> Result<Arc<dyn Judge>, PipelineError> {
    let base: Arc<dyn Judge> = match cfg.judge_backend {
        JudgeBackend::Mock => Arc::new(match &cfg.fixtures {
            Some(p) => MockJudge::from_fixture_file(cfg.seed, p)?,
            None => MockJudge::echo(cfg.seed),
        }),
        JudgeBackend::Http => Arc::new(HttpJudge::new(cfg.judge.clone())?),
    };
    Ok(match &cfg.cache_dir {
        Some(dir) => Arc::new(CachedJudge::new(base, Arc::new(ResponseCache::open(dir)?))),
        None => base,
    })
}

pub struct Pipeline {
    pub config: RunConfig,
    pub run: RunDir,
    judge: Option<Arc<dyn Judge>>,
    templates: TemplateSet,
    manifest: RunManifest,
}

impl Pipeline {
    /// Opens (or creates) the run directory. The judge is built on first use,
    /// so stages that need none never touch credentials.
    pub fn open(config: RunConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let templates = config.template_set()?;
        let run = RunDir::create(&config.out_dir)?;
        let snapshot = config.to_toml();
        let manifest = match RunManifest::load(&run.manifest())? {
            Some(mut m) => {
                m.config_snapshot = snapshot;
                m
            }
            None => {
                let started = Utc::now();
                RunManifest {
                    run_id: format!(
                        "{}-{:08x}",
                        started.format("%Y%m%dT%H%M%SZ"),
                        stable_hash(&[&snapshot]) & 0xffff_ffff
                    ),
                    config_snapshot: snapshot,
                    dataset_path: config.dataset.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
                    stages_completed: Vec::new(),
                    judge_model: String::new(),
                    seed: config.seed,
                    started,
                    finished: None,
                    failures: Vec::new(),
                }
            }
        };
        Ok(Pipeline { config, run, judge: None, templates, manifest })
    }

    /// Uses `judge` instead of the configured backend.
    pub fn with_judge(mut self, judge: Arc<dyn Judge>) -> Self {
        self.judge = Some(judge);
        self
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    fn judge(&mut self) -> Result<Arc<dyn Judge>, PipelineError> {
        if self.judge.is_none() {
            self.judge = Some(build_judge(&self.config)?);
        }
        let judge = self.judge.clone().expect("judge set");
        self.manifest.judge_model = judge.model_name().to_owned();
        Ok(judge)
    }

    fn dataset(&self) -> Result<Vec<Record>, PipelineError> {
        Ok(load_dataset(self.config.dataset_path()?, DatasetFormat::Jsonl)?)
    }

    fn finish_stage(&mut self, report: &StageReport) -> Result<(), PipelineError> {
        self.manifest.record_stage(report.stage, report.failures.clone());
        self.manifest.save(&self.run.manifest())
    }
}
