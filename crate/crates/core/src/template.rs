//! Prompt templates with `{placeholder}` substitution.
//!
//! A placeholder is an identifier (`[A-Za-z_][A-Za-z0-9_]*`) directly between
//! braces. Anything else in braces, such as the JSON examples inside the
//! shipped prompts, is literal text. Substitution is single-pass: values are
//! never re-scanned for placeholders.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template {template:?} references unknown placeholder {{{placeholder}}}")]
    Unbound { template: String, placeholder: String },
    #[error("template {template:?} lacks required placeholder {{{placeholder}}}")]
    Missing { template: String, placeholder: String },
    #[error("cannot read template {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub name: String,
    pub body: String,
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)\}").expect("valid regex"))
}

pub const POINTS_BODY: &str = include_str!("../templates/points.txt");
pub const WPA_BODY: &str = include_str!("../templates/wpa.txt");
pub const PCP_BODY: &str = include_str!("../templates/pcp.txt");
pub const COARSE3_BODY: &str = include_str!("../templates/coarse3.txt");
pub const RANK_BODY: &str = include_str!("../templates/rank.txt");
pub const PROMPT_OPTIM_BODY: &str = include_str!("../templates/prompt_optim.txt");

impl PromptTemplate {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Self {
        PromptTemplate { name: name.into(), body: body.into() }
    }

    pub fn from_file(name: impl Into<String>, path: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path)
            .map_err(|e| TemplateError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        Ok(PromptTemplate::new(name, body))
    }

    pub fn points() -> Self {
        PromptTemplate::new("points", POINTS_BODY)
    }
    pub fn wpa() -> Self {
        PromptTemplate::new("wpa", WPA_BODY)
    }
    pub fn pcp() -> Self {
        PromptTemplate::new("pcp", PCP_BODY)
    }
    pub fn coarse3() -> Self {
        PromptTemplate::new("coarse3", COARSE3_BODY)
    }
    pub fn rank() -> Self {
        PromptTemplate::new("rank", RANK_BODY)
    }
    pub fn prompt_optim() -> Self {
        PromptTemplate::new("prompt_optim", PROMPT_OPTIM_BODY)
    }

    /// Distinct placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for cap in placeholder_re().captures_iter(&self.body) {
            let name = &cap[1];
            if !out.iter().any(|n| n == name) {
                out.push(name.to_owned());
            }
        }
        out
    }

    /// Fails unless every name in `required` appears as a placeholder.
    pub fn require(&self, required: &[&str]) -> Result<(), TemplateError> {
        let present = self.placeholders();
        match required.iter().find(|r| !present.iter().any(|p| p == *r)) {
            Some(missing) => {
                Err(TemplateError::Missing { template: self.name.clone(), placeholder: (*missing).to_owned() })
            }
            None => Ok(()),
        }
    }

    /// Substitutes every placeholder; an unbound placeholder is an error.
    pub fn render(&self, bindings: &BTreeMap<&str, &str>) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.body.len());
        let mut last = 0;
        for cap in placeholder_re().captures_iter(&self.body) {
            let whole = cap.get(0).expect("match");
            let name = &cap[1];
            let value = bindings
                .get(name)
                .ok_or_else(|| TemplateError::Unbound { template: self.name.clone(), placeholder: name.to_owned() })?;
            out.push_str(&self.body[last..whole.start()]);
            out.push_str(value);
            last = whole.end();
        }
        out.push_str(&self.body[last..]);
        Ok(out)
    }

    /// `require` followed by `render`.
    pub fn render_checked(&self, required: &[&str], bindings: &BTreeMap<&str, &str>) -> Result<String, TemplateError> {
        self.require(required)?;
        self.render(bindings)
    }
}

/// The full set of prompts used by the pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub points: PromptTemplate,
    pub wpa: PromptTemplate,
    pub pcp: PromptTemplate,
    pub coarse3: PromptTemplate,
    pub rank: PromptTemplate,
    pub prompt_optim: PromptTemplate,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            points: PromptTemplate::points(),
            wpa: PromptTemplate::wpa(),
            pcp: PromptTemplate::pcp(),
            coarse3: PromptTemplate::coarse3(),
            rank: PromptTemplate::rank(),
            prompt_optim: PromptTemplate::prompt_optim(),
        }
    }
}
