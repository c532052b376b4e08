use std::fmt::Write as _;
use std::path::PathBuf;

use serde_json::Value;

use super::{Pipeline, PipelineError};
use crate::analysis::{CorrelationReport, LengthBinReport};

fn num(v: &Value) -> String {
    v.as_f64().map_or_else(|| "n/a".to_owned(), |x| format!("{x:.4}"))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.4}"))
}

impl Pipeline {
    fn read_report(&self, name: &str) -> Result<Option<Value>, PipelineError> {
        let path = self.run.reports().join(name);
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| PipelineError::Store {
                path,
                line: 0,
                reason: e.to_string(),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(PipelineError::io(&path, e)),
        }
    }

    /// Renders `reports/summary.md` from the report files present.
    pub fn report(&mut self) -> Result<PathBuf, PipelineError> {
        let mut md = String::from("# Evaluation summary\n");
        let mut sections = 0;

        if let Some(v) = self.read_report("correlation.json")? {
            let reports: Vec<CorrelationReport> = serde_json::from_value(v).map_err(|e| PipelineError::Store {
                path: self.run.reports().join("correlation.json"),
                line: 0,
                reason: e.to_string(),
            })?;
            md.push_str("\n## Instance-level correlation with stratified rankings\n\n");
            md.push_str("| metric | mean Spearman | mean Kendall | samples | undefined |\n|---|---|---|---|---|\n");
            for r in &reports {
                let _ = writeln!(
                    md,
                    "| {} | {} | {} | {} | {} |",
                    r.metric_name,
                    opt(r.mean_spearman),
                    opt(r.mean_kendall),
                    r.sample_count,
                    r.excluded_spearman
                );
            }
            sections += 1;
        }

        for (file, title) in [("ablation_scale.json", "Scale ablation"), ("ablation_weights.json", "Weight ablation")] {
            if let Some(Value::Array(rows)) = self.read_report(file)? {
                let _ = write!(
                    md,
                    "\n## {title}\n\n| variant | mean Spearman | mean Kendall | samples |\n|---|---|---|---|\n"
                );
                for r in rows {
                    let _ = writeln!(
                        md,
                        "| {} | {} | {} | {} |",
                        r["variant"].as_str().unwrap_or(""),
                        num(&r["mean_spearman"]),
                        num(&r["mean_kendall"]),
                        r["sample_count"]
                    );
                }
                sections += 1;
            }
        }

        if let Some(v) = self.read_report("noise_curves.json")? {
            md.push_str("\n## Noise robustness (mean Kendall vs. noiseless ranking)\n\n");
            let curves = v["curves"].as_array().cloned().unwrap_or_default();
            if let Some(first) = curves.first() {
                let sigmas: Vec<String> =
                    first["sigma_grid"].as_array().into_iter().flatten().map(|s| format!("σ={}", s)).collect();
                let _ = writeln!(md, "| metric | {} |", sigmas.join(" | "));
                let _ = writeln!(md, "|---|{}", "---|".repeat(sigmas.len()));
                for c in &curves {
                    let vals: Vec<String> =
                        c["mean_kendall_vs_original"].as_array().into_iter().flatten().map(num).collect();
                    let _ = writeln!(md, "| {} | {} |", c["metric_name"].as_str().unwrap_or(""), vals.join(" | "));
                }
            }
            for s in v["skipped"].as_array().into_iter().flatten() {
                let _ = writeln!(
                    md,
                    "\nSkipped {}: {}",
                    s["metric"].as_str().unwrap_or(""),
                    s["reason"].as_str().unwrap_or("")
                );
            }
            sections += 1;
        }

        if let Some(v) = self.read_report("length_bins.json")? {
            let reports: Vec<LengthBinReport> = serde_json::from_value(v).map_err(|e| PipelineError::Store {
                path: self.run.reports().join("length_bins.json"),
                line: 0,
                reason: e.to_string(),
            })?;
            md.push_str("\n## Spearman by response length\n\n| metric | bin (chars) | count | median | mean |\n|---|---|---|---|---|\n");
            for r in &reports {
                for b in &r.bins {
                    let _ = writeln!(
                        md,
                        "| {} | {:.0}-{:.0} | {} | {} | {} |",
                        r.metric_name,
                        b.lower,
                        b.upper,
                        b.count,
                        opt(b.stats.as_ref().map(|s| s.median)),
                        opt(b.stats.as_ref().map(|s| s.mean))
                    );
                }
            }
            sections += 1;
        }

        if let Some(v) = self.read_report("errors.json")? {
            let _ = write!(md, "\n## Error attribution\n\n{} not fully covered points.\n\n", v["record_count"]);
            md.push_str("| model | error type | proportion |\n|---|---|---|\n");
            if let Some(groups) = v["by_model"].as_object() {
                for (model, row) in groups {
                    for (t, p) in row.as_object().into_iter().flatten() {
                        let _ = writeln!(md, "| {model} | {t} | {} |", num(p));
                    }
                }
            }
            sections += 1;
        }

        if sections == 0 {
            return Err(PipelineError::MissingInput("no reports found; run the analyze stage".into()));
        }
        let path = self.run.reports().join("summary.md");
        std::fs::write(&path, md).map_err(|e| PipelineError::io(&path, e))?;
        let report = super::StageReport { stage: "report", processed: sections, skipped: 0, failures: Vec::new() };
        self.finish_stage(&report)?;
        Ok(path)
    }
}
