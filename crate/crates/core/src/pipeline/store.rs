//! Append-only JSONL stores. Later rows for the same key supersede earlier ones.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::domain::{InstanceEvaluation, ScoringPoint};
use crate::star::StratifiedRanking;

pub const POINTS_FILE: &str = "points.jsonl";
pub const EVALUATIONS_FILE: &str = "evaluations.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORTS_DIR: &str = "reports";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsRow {
    pub instance_id: String,
    pub points: Vec<ScoringPoint>,
}

/// Reads every row; a missing file is an empty store.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(PipelineError::io(path, e)),
    };
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(&line).map_err(|e| PipelineError::Store {
            path: path.to_owned(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn append_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), PipelineError> {
    if rows.is_empty() {
        return Ok(());
    }
    let mut buf = String::new();
    for row in rows {
        buf.push_str(&serde_json::to_string(row).expect("rows serialize"));
        buf.push('\n');
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| PipelineError::io(path, e))?;
    f.write_all(buf.as_bytes()).map_err(|e| PipelineError::io(path, e))?;
    f.sync_data().map_err(|e| PipelineError::io(path, e))
}

/// Paths of one run directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        let root = root.into();
        std::fs::create_dir_all(root.join(REPORTS_DIR)).map_err(|e| PipelineError::io(&root, e))?;
        Ok(RunDir { root })
    }

    pub fn points(&self) -> PathBuf {
        self.root.join(POINTS_FILE)
    }
    pub fn evaluations(&self) -> PathBuf {
        self.root.join(EVALUATIONS_FILE)
    }
    pub fn labels(&self) -> PathBuf {
        self.root.join(LABELS_FILE)
    }
    pub fn manifest(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }
    pub fn reports(&self) -> PathBuf {
        self.root.join(REPORTS_DIR)
    }

    pub fn load_points(&self) -> Result<BTreeMap<String, Vec<ScoringPoint>>, PipelineError> {
        let rows: Vec<PointsRow> = read_jsonl(&self.points())?;
        Ok(rows.into_iter().map(|r| (r.instance_id, r.points)).collect())
    }

    pub fn load_evaluations(&self) -> Result<BTreeMap<(String, String), InstanceEvaluation>, PipelineError> {
        let rows: Vec<InstanceEvaluation> = read_jsonl(&self.evaluations())?;
        Ok(rows.into_iter().map(|r| ((r.instance_id.clone(), r.model_id.clone()), r)).collect())
    }

    /// Labels ordered by instance id, then offset.
    pub fn load_labels(&self) -> Result<Vec<StratifiedRanking>, PipelineError> {
        let rows: Vec<StratifiedRanking> = read_jsonl(&self.labels())?;
        let by_key: BTreeMap<(String, usize), StratifiedRanking> =
            rows.into_iter().map(|r| ((r.instance_id.clone(), r.offset), r)).collect();
        Ok(by_key.into_values().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn append_then_read_last_wins() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::create(dir.path().join("r")).unwrap();
        let mut a = InstanceEvaluation::new("i", "m");
        a.scores.insert("BLEU".into(), 0.1);
        append_jsonl(&run.evaluations(), &[a.clone()]).unwrap();
        a.scores.insert("BLEU".into(), 0.2);
        append_jsonl(&run.evaluations(), &[a.clone()]).unwrap();
        let got = run.load_evaluations().unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[&("i".into(), "m".into())].scores["BLEU"], 0.2);
        assert!(run.load_points().unwrap().is_empty());
    }

    #[test]
    fn corrupt_line_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        std::fs::write(&p, "{\"instance_id\":\"a\",\"points\":[]}\nnot json\n").unwrap();
        match read_jsonl::<PointsRow>(&p) {
            Err(PipelineError::Store { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
