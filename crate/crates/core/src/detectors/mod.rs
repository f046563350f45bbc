//! Eleven process-defect detectors over standardized trajectories.
//!
//! Each detector extracts features, computes a continuous score in [0, 1],
//! applies exemption logic, and reports a [`RawFinding`]. Activation follows
//! a single rule everywhere: triggered iff score >= threshold and the
//! finding is not exempt. Detectors never error; inapplicable trajectories
//! degrade to score 0.

mod config;
mod context;
mod ecosystem;
mod tooluse;
mod workflow;

pub use config::DetectorConfig;

use crate::trajectory::Trajectory;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub use context::{detect_cw_thrashing, detect_ghost_context, detect_oversized_rules};
pub use ecosystem::{detect_inconsistent_tool_interface, detect_weak_tool};
pub use tooluse::{
    detect_dead_step, detect_duplicate_step, detect_long_chain, detect_tool_call_chain,
    longest_periodic_run,
};
pub use workflow::{detect_context_coupling, detect_wrapper_workflow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    ContextMgmt,
    ToolUse,
    WorkflowArch,
    ToolEcosystem,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::ContextMgmt,
        Dimension::ToolUse,
        Dimension::WorkflowArch,
        Dimension::ToolEcosystem,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::ContextMgmt => "context_mgmt",
            Dimension::ToolUse => "tool_use",
            Dimension::WorkflowArch => "workflow_arch",
            Dimension::ToolEcosystem => "tool_ecosystem",
        }
    }

    pub fn classes(self) -> Vec<DefectClass> {
        DefectClass::ALL
            .iter()
            .copied()
            .filter(|c| c.dimension() == self)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectClass {
    GhostContext,
    OversizedRules,
    CwThrashing,
    DuplicateStep,
    ToolCallChain,
    DeadStep,
    LongChain,
    WrapperWorkflow,
    ContextCoupling,
    InconsistentToolInterface,
    WeakTool,
}

impl DefectClass {
    /// Fixed class order used everywhere findings are listed.
    pub const ALL: [DefectClass; 11] = [
        DefectClass::GhostContext,
        DefectClass::OversizedRules,
        DefectClass::CwThrashing,
        DefectClass::DuplicateStep,
        DefectClass::ToolCallChain,
        DefectClass::DeadStep,
        DefectClass::LongChain,
        DefectClass::WrapperWorkflow,
        DefectClass::ContextCoupling,
        DefectClass::InconsistentToolInterface,
        DefectClass::WeakTool,
    ];

    pub fn dimension(self) -> Dimension {
        match self {
            DefectClass::GhostContext | DefectClass::OversizedRules | DefectClass::CwThrashing => {
                Dimension::ContextMgmt
            }
            DefectClass::DuplicateStep
            | DefectClass::ToolCallChain
            | DefectClass::DeadStep
            | DefectClass::LongChain => Dimension::ToolUse,
            DefectClass::WrapperWorkflow | DefectClass::ContextCoupling => Dimension::WorkflowArch,
            DefectClass::InconsistentToolInterface | DefectClass::WeakTool => {
                Dimension::ToolEcosystem
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DefectClass::GhostContext => "ghost_context",
            DefectClass::OversizedRules => "oversized_rules",
            DefectClass::CwThrashing => "cw_thrashing",
            DefectClass::DuplicateStep => "duplicate_step",
            DefectClass::ToolCallChain => "tool_call_chain",
            DefectClass::DeadStep => "dead_step",
            DefectClass::LongChain => "long_chain",
            DefectClass::WrapperWorkflow => "wrapper_workflow",
            DefectClass::ContextCoupling => "context_coupling",
            DefectClass::InconsistentToolInterface => "inconsistent_tool_interface",
            DefectClass::WeakTool => "weak_tool",
        }
    }
}

impl std::str::FromStr for DefectClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DefectClass::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown defect class {s:?}"))
    }
}

/// Extracted features, the continuous evidence score, and the event spans
/// that justify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    pub defect: DefectClass,
    pub features: BTreeMap<String, f64>,
    pub score: f64,
    pub supporting_spans: Vec<(usize, usize)>,
}

impl EvidenceRecord {
    /// Bare record carrying only a score; handy for calibration inputs.
    pub fn scored(defect: DefectClass, score: f64) -> Self {
        Self {
            defect,
            features: BTreeMap::new(),
            score,
            supporting_spans: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFinding {
    pub defect: DefectClass,
    pub evidence: EvidenceRecord,
    pub threshold: f64,
    pub exempted: bool,
    pub exempt_rationale: Option<String>,
    pub triggered: bool,
}

impl RawFinding {
    /// Builds the finding and applies the activation rule.
    pub fn from_evidence(evidence: EvidenceRecord, threshold: f64, exempt: Option<String>) -> Self {
        let exempted = exempt.is_some();
        let triggered = evidence.score >= threshold && !exempted;
        Self {
            defect: evidence.defect,
            evidence,
            threshold,
            exempted,
            exempt_rationale: exempt,
            triggered,
        }
    }
}

pub(crate) fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Run all eleven detectors in fixed class order.
pub fn detect_all(t: &Trajectory, cfg: &DetectorConfig) -> Vec<RawFinding> {
    DefectClass::ALL
        .iter()
        .map(|&class| detect_one(t, cfg, class))
        .collect()
}

pub fn detect_one(t: &Trajectory, cfg: &DetectorConfig, class: DefectClass) -> RawFinding {
    match class {
        DefectClass::GhostContext => detect_ghost_context(t, cfg),
        DefectClass::OversizedRules => detect_oversized_rules(t, cfg),
        DefectClass::CwThrashing => detect_cw_thrashing(t, cfg),
        DefectClass::DuplicateStep => detect_duplicate_step(t, cfg),
        DefectClass::ToolCallChain => detect_tool_call_chain(t, cfg),
        DefectClass::DeadStep => detect_dead_step(t, cfg),
        DefectClass::LongChain => detect_long_chain(t, cfg),
        DefectClass::WrapperWorkflow => detect_wrapper_workflow(t, cfg),
        DefectClass::ContextCoupling => detect_context_coupling(t, cfg),
        DefectClass::InconsistentToolInterface => detect_inconsistent_tool_interface(t, cfg),
        DefectClass::WeakTool => detect_weak_tool(t, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{Outcome, Source, TrajectoryBuilder};

    #[test]
    fn class_dimension_grouping_is_fixed() {
        assert_eq!(Dimension::ContextMgmt.classes().len(), 3);
        assert_eq!(Dimension::ToolUse.classes().len(), 4);
        assert_eq!(Dimension::WorkflowArch.classes().len(), 2);
        assert_eq!(Dimension::ToolEcosystem.classes().len(), 2);
    }

    #[test]
    fn minimal_trajectory_yields_eleven_zero_findings() {
        let mut b = TrajectoryBuilder::new("min", Source::Other, Outcome::Unknown, 1000);
        b.message("hello");
        let t = b.build();
        let findings = detect_all(&t, &DetectorConfig::default());
        assert_eq!(findings.len(), 11);
        for (f, class) in findings.iter().zip(DefectClass::ALL) {
            assert_eq!(f.defect, class);
            assert_eq!(f.evidence.score, 0.0);
            assert!(!f.triggered);
        }
    }

    #[test]
    fn detect_all_is_deterministic() {
        let mut b = TrajectoryBuilder::new("d", Source::Terminal, Outcome::Success, 4000);
        b.message("plan");
        b.tool_call("read_file", &[("path", "a.rs")]);
        b.tool_result("content_a", crate::trajectory::ValidationStatus::Pass);
        b.message("content_a looks fine");
        let t = b.build();
        let cfg = DetectorConfig::default();
        assert_eq!(detect_all(&t, &cfg), detect_all(&t, &cfg));
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        let mut b = TrajectoryBuilder::new("r", Source::Terminal, Outcome::Failure, 2000);
        for _ in 0..8 {
            b.tool_call("run_tests", &[("filter", "all")]);
            b.tool_result("fail", crate::trajectory::ValidationStatus::Fail);
        }
        let t = b.build();
        for f in detect_all(&t, &DetectorConfig::default()) {
            assert!((0.0..=1.0).contains(&f.evidence.score), "{:?}", f.defect);
            assert!(f.evidence.features.values().all(|v| v.is_finite()));
        }
    }
}
