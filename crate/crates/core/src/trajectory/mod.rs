//! Standardized trajectory model.
//!
//! Every supported log format is mapped onto the same event tuple so that
//! downstream detectors never see adapter-specific structure. A trajectory is
//! immutable once built; all derived views (dependency graph, segment stats)
//! are computed on demand from the event list.

mod adapters;
mod builder;
mod canonical;
mod graph;
mod stats;

pub use adapters::{ingest_raw_log, Adapter, AdapterRegistry, CanonicalAdapter, FixtureAdapter};
pub use builder::TrajectoryBuilder;
pub use canonical::{canonical_parse, canonical_serialize};
pub use graph::{
    build_dependency_graph, strongly_connected_components, DependencyGraph, Edge, EdgeKind,
    GraphConfig, NodeId,
};
pub use stats::{context_segment_stats, SegmentStats};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("unknown adapter: {0}")]
    UnknownAdapter(String),
    #[error("malformed record at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invariant violation at event {index}: {reason}")]
    Invariant { index: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Message,
    ToolCall,
    ToolResult,
    ContextOp,
    ExternalOp,
    ControlMarker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationStatus {
    Pass,
    Fail,
    /// Tool ran but produced no pass/fail signal.
    #[serde(rename = "none")]
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub status: ValidationStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExternalOpKind {
    FileWrite,
    FileDelete,
    Network,
    ProcessSpawn,
    VcsCommit,
    Checkpoint,
    Rollback,
    HandoffRequest,
    ConfirmationPoint,
    StageMarker,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalOperation {
    pub op_kind: ExternalOpKind,
    pub target: String,
}

/// Tool invocation with argument order preserved as observed in the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInvocation {
    pub tool_name: String,
    pub arguments: Vec<(String, String)>,
}

impl ToolInvocation {
    /// Flattened `name k v k v ...` text used for similarity comparison.
    pub fn flattened(&self) -> String {
        let mut out = self.tool_name.clone();
        for (k, v) in &self.arguments {
            out.push(' ');
            out.push_str(k);
            out.push(' ');
            out.push_str(v);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentTag {
    RuleText,
    RetainedSummary,
    PersistentMemory,
    RawContent,
}

impl SegmentTag {
    /// Tags excluded from ghost-context scoring.
    pub fn is_retention_exempt(self) -> bool {
        matches!(
            self,
            SegmentTag::RuleText | SegmentTag::RetainedSummary | SegmentTag::PersistentMemory
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSegment {
    pub segment_id: String,
    pub token_count: u64,
    pub created_at: usize,
    pub last_referenced_at: Option<usize>,
    pub tag: SegmentTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextState {
    pub tokens_used: u64,
    pub window_capacity: u64,
    pub segments: Vec<ContextSegment>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dependency {
    pub parent_index: Option<usize>,
    pub branch_id: Option<String>,
    pub unit_id: Option<String>,
    pub agent_id: Option<String>,
}

/// The standardized event tuple: type, payload, tool invocation, validation,
/// external operation, context state, and structural dependency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub index: usize,
    pub event_type: EventType,
    pub payload: String,
    pub tool: Option<ToolInvocation>,
    pub validation: Option<ValidationResult>,
    pub external: Option<ExternalOperation>,
    pub context: ContextState,
    pub dependency: Dependency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Android,
    Terminal,
    Swebench,
    Synthetic,
    Other,
}

impl Source {
    pub const ALL: [Source; 5] = [
        Source::Android,
        Source::Terminal,
        Source::Swebench,
        Source::Synthetic,
        Source::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Android => "android",
            Source::Terminal => "terminal",
            Source::Swebench => "swebench",
            Source::Synthetic => "synthetic",
            Source::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub trajectory_id: String,
    pub source: Source,
    pub outcome: Outcome,
    pub events: Vec<Event>,
    pub metadata: BTreeMap<String, String>,
}

impl Trajectory {
    /// Check every structural invariant; reports the first offending event.
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if self.events.is_empty() {
            return Err(TrajectoryError::Invariant {
                index: 0,
                reason: "trajectory has no events".into(),
            });
        }
        for (i, ev) in self.events.iter().enumerate() {
            let fail = |reason: String| TrajectoryError::Invariant { index: i, reason };
            if ev.index != i {
                return Err(fail(format!("event index {} out of order (expected {i})", ev.index)));
            }
            if ev.context.window_capacity == 0 {
                return Err(fail("window_capacity must be positive".into()));
            }
            if ev.context.tokens_used > ev.context.window_capacity {
                return Err(fail(format!(
                    "tokens_used {} exceeds window_capacity {}",
                    ev.context.tokens_used, ev.context.window_capacity
                )));
            }
            let seg_sum: u64 = ev.context.segments.iter().map(|s| s.token_count).sum();
            if seg_sum > ev.context.tokens_used {
                return Err(fail(format!(
                    "segment tokens {seg_sum} exceed tokens_used {}",
                    ev.context.tokens_used
                )));
            }
            for seg in &ev.context.segments {
                if let Some(last) = seg.last_referenced_at {
                    if last < seg.created_at {
                        return Err(fail(format!(
                            "segment {} referenced before creation",
                            seg.segment_id
                        )));
                    }
                }
            }
            if let Some(p) = ev.dependency.parent_index {
                if p >= i {
                    return Err(fail(format!("parent_index {p} does not precede event")));
                }
            }
            if ev.event_type == EventType::ToolResult {
                match ev.dependency.parent_index {
                    Some(p) if self.events[p].event_type == EventType::ToolCall => {}
                    Some(p) => {
                        return Err(fail(format!("tool_result parent {p} is not a tool_call")))
                    }
                    None => return Err(fail("tool_result has no parent tool_call".into())),
                }
            }
        }
        Ok(())
    }

    /// Tool invoked by the parent call of a `tool_result` event.
    pub fn result_tool_name(&self, result_index: usize) -> Option<&str> {
        let ev = self.events.get(result_index)?;
        let parent = ev.dependency.parent_index?;
        self.events
            .get(parent)
            .and_then(|p| p.tool.as_ref())
            .map(|t| t.tool_name.as_str())
    }
}
