//! Programmatic trajectory construction for fixtures, adapters, and the
//! synthetic generator. The builder maintains context-state bookkeeping so
//! every produced trajectory satisfies the event invariants by construction.

use super::*;

const DEFAULT_TOKENS_PER_EVENT: u64 = 15;

pub struct TrajectoryBuilder {
    trajectory_id: String,
    source: Source,
    outcome: Outcome,
    capacity: u64,
    metadata: BTreeMap<String, String>,
    events: Vec<Event>,
    tokens_used: u64,
    tokens_per_event: u64,
    live_segments: Vec<ContextSegment>,
    unit: Option<String>,
    agent: Option<String>,
    branch: Option<String>,
    open_calls: Vec<usize>,
}

impl TrajectoryBuilder {
    pub fn new(id: &str, source: Source, outcome: Outcome, capacity: u64) -> Self {
        Self {
            trajectory_id: id.to_string(),
            source,
            outcome,
            capacity,
            metadata: BTreeMap::new(),
            events: Vec::new(),
            tokens_used: 0,
            tokens_per_event: DEFAULT_TOKENS_PER_EVENT,
            live_segments: Vec::new(),
            unit: None,
            agent: None,
            branch: None,
            open_calls: Vec::new(),
        }
    }

    pub fn metadata(&mut self, key: &str, value: &str) -> &mut Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// Unit applied to subsequently pushed events.
    pub fn set_unit(&mut self, unit: Option<&str>) -> &mut Self {
        self.unit = unit.map(str::to_string);
        self
    }

    pub fn set_branch(&mut self, branch: Option<&str>) -> &mut Self {
        self.branch = branch.map(str::to_string);
        self
    }

    pub fn set_agent(&mut self, agent: Option<&str>) -> &mut Self {
        self.agent = agent.map(str::to_string);
        self
    }

    pub fn set_tokens_used(&mut self, tokens: u64) -> &mut Self {
        self.tokens_used = tokens.min(self.capacity);
        self
    }

    pub fn tokens_used(&self) -> u64 {
        self.tokens_used
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn set_tokens_per_event(&mut self, tokens: u64) -> &mut Self {
        self.tokens_per_event = tokens;
        self
    }

    pub fn next_index(&self) -> usize {
        self.events.len()
    }

    fn push(
        &mut self,
        event_type: EventType,
        payload: &str,
        tool: Option<ToolInvocation>,
        validation: Option<ValidationResult>,
        external: Option<ExternalOperation>,
        parent: Option<usize>,
    ) -> usize {
        let index = self.events.len();
        self.tokens_used = (self.tokens_used + self.tokens_per_event).min(self.capacity);
        // Keep segment accounting valid: segments live inside tokens_used.
        let seg_sum: u64 = self.live_segments.iter().map(|s| s.token_count).sum();
        if self.tokens_used < seg_sum {
            self.tokens_used = seg_sum.min(self.capacity);
        }
        // Track last reference for live segments mentioned by this event.
        let lower = payload.to_lowercase();
        let tool_text = tool.as_ref().map(|t| t.flattened().to_lowercase());
        for seg in &mut self.live_segments {
            let id = seg.segment_id.to_lowercase();
            let hit = lower.contains(&id)
                || tool_text.as_ref().map(|t| t.contains(&id)).unwrap_or(false);
            if hit && index > seg.created_at {
                seg.last_referenced_at = Some(index);
            }
        }
        self.events.push(Event {
            index,
            event_type,
            payload: payload.to_string(),
            tool,
            validation,
            external,
            context: ContextState {
                tokens_used: self.tokens_used,
                window_capacity: self.capacity,
                segments: self.live_segments.clone(),
            },
            dependency: Dependency {
                parent_index: parent,
                branch_id: self.branch.clone(),
                unit_id: self.unit.clone(),
                agent_id: self.agent.clone(),
            },
        });
        index
    }

    pub fn message(&mut self, payload: &str) -> usize {
        self.push(EventType::Message, payload, None, None, None, None)
    }

    pub fn tool_call(&mut self, tool_name: &str, arguments: &[(&str, &str)]) -> usize {
        let inv = ToolInvocation {
            tool_name: tool_name.to_string(),
            arguments: arguments
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        };
        let idx = self.push(EventType::ToolCall, "", Some(inv), None, None, None);
        self.open_calls.push(idx);
        idx
    }

    /// Result of the most recent unresolved tool call.
    pub fn tool_result(&mut self, payload: &str, status: ValidationStatus) -> usize {
        let parent = self.open_calls.pop();
        self.push(
            EventType::ToolResult,
            payload,
            None,
            Some(ValidationResult {
                status,
                detail: String::new(),
            }),
            None,
            parent,
        )
    }

    /// Result attached to an explicit parent call index.
    pub fn tool_result_for(&mut self, parent: usize, payload: &str, status: ValidationStatus) -> usize {
        self.open_calls.retain(|&c| c != parent);
        self.push(
            EventType::ToolResult,
            payload,
            None,
            Some(ValidationResult {
                status,
                detail: String::new(),
            }),
            None,
            Some(parent),
        )
    }

    pub fn external(&mut self, op_kind: ExternalOpKind, target: &str) -> usize {
        self.push(
            EventType::ExternalOp,
            "",
            None,
            None,
            Some(ExternalOperation {
                op_kind,
                target: target.to_string(),
            }),
            None,
        )
    }

    /// Stage marker: a control event that also records a stage_marker op.
    pub fn stage_marker(&mut self, label: &str) -> usize {
        self.push(
            EventType::ControlMarker,
            label,
            None,
            None,
            Some(ExternalOperation {
                op_kind: ExternalOpKind::StageMarker,
                target: label.to_string(),
            }),
            None,
        )
    }

    pub fn control_marker(&mut self, payload: &str) -> usize {
        self.push(EventType::ControlMarker, payload, None, None, None, None)
    }

    pub fn add_segment(&mut self, segment_id: &str, token_count: u64, tag: SegmentTag) -> usize {
        let created_at = self.events.len();
        self.live_segments.push(ContextSegment {
            segment_id: segment_id.to_string(),
            token_count,
            created_at,
            last_referenced_at: None,
            tag,
        });
        self.push(
            EventType::ContextOp,
            &format!("segment {segment_id} added"),
            None,
            None,
            None,
            None,
        )
    }

    pub fn drop_segment(&mut self, segment_id: &str) -> usize {
        self.live_segments.retain(|s| s.segment_id != segment_id);
        self.push(
            EventType::ContextOp,
            &format!("segment {segment_id} dropped"),
            None,
            None,
            None,
            None,
        )
    }

    pub fn build(self) -> Trajectory {
        Trajectory {
            trajectory_id: self.trajectory_id,
            source: self.source,
            outcome: self.outcome,
            events: self.events,
            metadata: self.metadata,
        }
    }
}
