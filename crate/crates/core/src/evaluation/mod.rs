//! Evaluation harness: detector metrics against annotations, annotation
//! agreement, failure correlations, split construction, and ranking
//! stability analyses.

mod agreement;
mod correlation;
mod metrics;
mod ranking;
mod split;

pub use agreement::cohen_kappa;
pub use correlation::{defect_correlation_matrix, defect_failure_correlation, CorrelationMatrix};
pub use metrics::{detection_metrics, MetricBundle};
pub use ranking::{bootstrap_ranking, eta_sweep, rank_shift, EtaPoint, SystemRankStats};
pub use split::{stratified_split, SplitCase, SplitResult};

use crate::detectors::DefectClass;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const ANNOTATION_SCHEMA: &str = "trajlens.annotations.v1";

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("inputs are misaligned: {0}")]
    Misaligned(String),
    #[error("stratum {stratum} has {available} cases but needs at least {needed}")]
    StratumTooSmall {
        stratum: String,
        needed: usize,
        available: usize,
    },
    #[error("split ratios sum to {expected} but {total} cases were given")]
    RatioMismatch { expected: usize, total: usize },
    #[error("need at least {needed} cases, got {got}")]
    TooFewCases { needed: usize, got: usize },
    #[error("bootstrap needs at least one replicate")]
    BadReplicates,
    #[error("eta grid is empty")]
    EmptyGrid,
    #[error("annotation for {trajectory_id} marks {defect:?} exempt without an evidence note")]
    ExemptWithoutNote {
        trajectory_id: String,
        defect: DefectClass,
    },
}

/// Per-defect annotation outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Present,
    Absent,
    Exempt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub trajectory_id: String,
    pub labels: BTreeMap<DefectClass, Label>,
    #[serde(default)]
    pub evidence_note: String,
    pub annotator_id: String,
    #[serde(default)]
    pub adjudicated: bool,
}

impl AnnotationRecord {
    /// Exempt labels must be justified by an evidence note.
    pub fn validate(&self) -> Result<(), EvaluationError> {
        for (defect, label) in &self.labels {
            if *label == Label::Exempt && self.evidence_note.trim().is_empty() {
                return Err(EvaluationError::ExemptWithoutNote {
                    trajectory_id: self.trajectory_id.clone(),
                    defect: *defect,
                });
            }
        }
        Ok(())
    }
}

/// Descending ranks starting at 1; tied scores share the minimum rank.
pub fn min_ranks(scores: &[f64]) -> Vec<usize> {
    scores
        .iter()
        .map(|s| 1 + scores.iter().filter(|o| **o > *s).count())
        .collect()
}
