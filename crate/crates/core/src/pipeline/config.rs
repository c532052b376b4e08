use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::analysis::DEFAULT_SIGMA_GRID;
use crate::judge::JudgeConfig;
use crate::points::{DEFAULT_MAX_POINTS, DEFAULT_PARSE_RETRIES};
use crate::star::StarConfig;
use crate::template::{PromptTemplate, TemplateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeBackend {
    Http,
    Mock,
}

impl FromStr for JudgeBackend {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "http" => Ok(JudgeBackend::Http),
            "mock" => Ok(JudgeBackend::Mock),
            other => Err(PipelineError::Config(format!("unknown judge backend {other:?} (expected http or mock)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Wpa,
    Pcp,
    Coarse3,
    Merge,
    Bleu,
    RougeL,
}

impl MetricName {
    pub const ALL: [MetricName; 6] = [
        MetricName::Wpa,
        MetricName::Pcp,
        MetricName::Coarse3,
        MetricName::Merge,
        MetricName::Bleu,
        MetricName::RougeL,
    ];

    /// Key used in `InstanceEvaluation::scores`.
    pub fn score_key(self) -> &'static str {
        use crate::domain::score_names::*;
        match self {
            MetricName::Wpa => WPA,
            MetricName::Pcp => PCP,
            MetricName::Coarse3 => COARSE3,
            MetricName::Merge => MERGE,
            MetricName::Bleu => BLEU,
            MetricName::RougeL => ROUGE_L,
        }
    }

    pub fn higher_is_better(self) -> bool {
        self != MetricName::Pcp
    }

    pub fn from_score_key(key: &str) -> Option<Self> {
        MetricName::ALL.into_iter().find(|m| m.score_key() == key)
    }
}

impl FromStr for MetricName {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "wpa" => Ok(MetricName::Wpa),
            "pcp" => Ok(MetricName::Pcp),
            "coarse3" => Ok(MetricName::Coarse3),
            "merge" => Ok(MetricName::Merge),
            "bleu" => Ok(MetricName::Bleu),
            "rouge_l" | "rougel" => Ok(MetricName::RougeL),
            other => Err(PipelineError::Config(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Correlation,
    AblationScale,
    AblationWeights,
    Noise,
    LengthBins,
    Errors,
}

impl Study {
    pub const ALL: [Study; 6] = [
        Study::Correlation,
        Study::AblationScale,
        Study::AblationWeights,
        Study::Noise,
        Study::LengthBins,
        Study::Errors,
    ];
}

impl FromStr for Study {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "correlation" => Ok(Study::Correlation),
            "ablation_scale" => Ok(Study::AblationScale),
            "ablation_weights" => Ok(Study::AblationWeights),
            "noise" => Ok(Study::Noise),
            "length_bins" => Ok(Study::LengthBins),
            "errors" => Ok(Study::Errors),
            other => Err(PipelineError::Config(format!("unknown study {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClassifierKind {
    Rules,
    Judge,
}

/// Optional prompt overrides; unset entries use the built-in templates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplatePaths {
    pub points: Option<PathBuf>,
    pub wpa: Option<PathBuf>,
    pub pcp: Option<PathBuf>,
    pub coarse3: Option<PathBuf>,
    pub rank: Option<PathBuf>,
}

/// Effective run configuration. Loaded from TOML; command-line flags
/// override file values. Credentials are never stored here, only the name of
/// the environment variable holding them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub cache_dir: Option<PathBuf>,
    pub judge_backend: JudgeBackend,
    /// Scripted answers for the mock judge; unset means prompt-driven answers.
    pub fixtures: Option<PathBuf>,
    pub metrics: Vec<MetricName>,
    pub lambda_m: f64,
    pub parse_retries: u32,
    pub max_points: usize,
    pub bleu_max_n: usize,
    pub studies: Vec<Study>,
    pub sigma_grid: Vec<f64>,
    pub num_bins: usize,
    pub error_classifier: ErrorClassifierKind,
    pub judge: JudgeConfig,
    pub star: StarConfig,
    pub templates: TemplatePaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            out_dir: PathBuf::from("run"),
            seed: 0,
            cache_dir: None,
            judge_backend: JudgeBackend::Http,
            fixtures: None,
            metrics: MetricName::ALL.to_vec(),
            lambda_m: 0.2,
            parse_retries: DEFAULT_PARSE_RETRIES,
            max_points: DEFAULT_MAX_POINTS,
            bleu_max_n: 4,
            studies: vec![Study::Correlation],
            sigma_grid: DEFAULT_SIGMA_GRID.to_vec(),
            num_bins: 4,
            error_classifier: ErrorClassifierKind::Rules,
            judge: JudgeConfig::default(),
            star: StarConfig::default(),
            templates: TemplatePaths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(format!("bad configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn dataset_path(&self) -> Result<&Path, PipelineError> {
        self.dataset.as_deref().ok_or_else(|| PipelineError::Config("no dataset given (--dataset)".into()))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.lambda_m) {
            return Err(PipelineError::Config(format!("lambda_m must lie in [0, 1], got {}", self.lambda_m)));
        }
        if self.num_bins == 0 {
            return Err(PipelineError::Config("num_bins must be at least 1".into()));
        }
        self.star.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if self.judge_backend == JudgeBackend::Http {
            self.judge.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn template_set(&self) -> Result<TemplateSet, PipelineError> {
        let mut set = TemplateSet::default();
        let t = &self.templates;
        for (slot, path, name) in [
            (&mut set.points, &t.points, "points"),
            (&mut set.wpa, &t.wpa, "wpa"),
            (&mut set.pcp, &t.pcp, "pcp"),
            (&mut set.coarse3, &t.coarse3, "coarse3"),
            (&mut set.rank, &t.rank, "rank"),
        ] {
            if let Some(p) = path {
                *slot = PromptTemplate::from_file(name, p).map_err(|e| PipelineError::Config(e.to_string()))?;
            }
        }
        Ok(set)
    }
}

/// Parses a comma-separated list.
pub fn parse_list<T: FromStr<Err = PipelineError>>(s: &str) -> Result<Vec<T>, PipelineError> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| p.trim().parse()).collect()
}
