//! Importance-weighted, reference-factorized evaluation of long-form generations.
//!
//! A reference answer is factorized by an LLM judge into scoring points, each
//! carrying an integer importance weight in `{1, 2, 3}`. Candidate responses are
//! then judged point by point:
//!
//! * **WPA** (weighted point-wise alignment): `Σ mᵢ·wᵢ / Σ wᵢ` with `mᵢ ∈ {0, 0.5, 1}`.
//! * **PCP** (point-wise conflict penalty): `Σ pᵢ·wᵢ / Σ wᵢ` with `pᵢ ∈ {0, 1}`.
//! * **Merge**: `λ·Coarse3 + (1 − λ)·WPA`.
//!
//! Responses are ranked by a judge and subsampled at fixed in-group offsets
//! ([`star`]) to obtain well-separated pseudo-labels, against which metrics are
//! compared with instance-level Spearman and Kendall correlation ([`analysis`]).
//!
//! The crate is organised as a library; `cargo run --example <name>` shows each
//! capability in isolation, and the `scorepoint` binary wires the stages into a
//! resumable pipeline.
//!
//! ```
//! use scorepoint::metrics::{compute_wpa, compute_merge, MergeConfig};
//! use scorepoint::domain::{ScoringPoint, PointAssessment, Alignment};
//!
//! let points = vec![
//!     ScoringPoint::new(1, "near the beach", 3).unwrap(),
//!     ScoringPoint::new(2, "quiet rooms", 2).unwrap(),
//!     ScoringPoint::new(3, "free parking", 1).unwrap(),
//! ];
//! let assessments = vec![
//!     PointAssessment::new(1, Alignment::Full, ""),
//!     PointAssessment::new(2, Alignment::Partial, ""),
//!     PointAssessment::new(3, Alignment::None, ""),
//! ];
//! let wpa = compute_wpa(&points, &assessments).unwrap();
//! assert!((wpa - 4.0 / 6.0).abs() < 1e-12);
//! let merged = compute_merge(1.0, wpa, &MergeConfig::default()).unwrap();
//! assert!((merged - (0.2 + 0.8 * wpa)).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod dataset;
pub mod domain;
pub mod jsonout;
pub mod judge;
pub mod metrics;
pub mod pipeline;
pub mod points;
pub mod rng;
pub mod star;
pub mod template;

pub use domain::{
    Alignment, ErrorType, GeneratedResponse, Instance, InstanceEvaluation, PenaltyAssessment, PointAssessment,
    ScoringPoint, TaskType,
};
pub use judge::{Judge, JudgeConfig, JudgeError, JudgeRequest};
