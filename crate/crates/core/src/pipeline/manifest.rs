use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub instance_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    pub error: String,
}

/// Record of a run directory: what was configured and which stages ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_snapshot: String,
    pub dataset_path: String,
    pub stages_completed: Vec<String>,
    pub judge_model: String,
    pub seed: u64,
    pub started: DateTime<Utc>,
    pub finished: Option<DateTime<Utc>>,
    /// Failures of the most recent invocation of each stage.
    #[serde(default)]
    pub failures: Vec<StageFailure>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Option<Self>, PipelineError> {
        match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| PipelineError::Store {
                path: path.to_owned(),
                line: 0,
                reason: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(PipelineError::io(path, e)),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&tmp, text + "\n").map_err(|e| PipelineError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
    }

    /// Replaces the failures of `stage` and marks it completed.
    pub fn record_stage(&mut self, stage: &str, failures: Vec<StageFailure>) {
        self.failures.retain(|f| f.stage != stage);
        self.failures.extend(failures);
        if !self.stages_completed.iter().any(|s| s == stage) {
            self.stages_completed.push(stage.to_owned());
        }
        self.finished = Some(Utc::now());
    }
}
