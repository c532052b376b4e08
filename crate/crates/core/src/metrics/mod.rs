//! Scoring: WPA, PCP, Merge, the three-level holistic rubric, a harness for
//! external rubric prompts, and the BLEU / ROUGE-L baselines.

mod assess;
mod baselines;
mod scores;

use thiserror::Error;

pub use assess::{
    assess_alignment, assess_conflicts, coarse3, parse_alignment_output, parse_coarse3_output, parse_penalty_output,
    parse_rating, render_alignment_prompt, render_coarse3_prompt, render_conflict_prompt, rubric_score,
    AssessGrammarError, ALIGNMENT_KEY, PENALTY_KEY,
};
pub use baselines::{bleu, rouge_l, tokenize, BLEU_EPSILON};
pub use scores::{compute_merge, compute_pcp, compute_wpa, MergeConfig, PcpResult, WpaResult};

use crate::judge::JudgeError;
use crate::template::TemplateError;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cannot pair points with judgements: {0}")]
    Pairing(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error("{what} failed after {attempts} attempt(s): {last_error}; last output: {last_raw:?}")]
    Failed { what: &'static str, attempts: u32, last_error: AssessGrammarError, last_raw: String },
}
