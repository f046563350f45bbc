//! Adapter registry mapping raw log formats onto the standardized model.
//!
//! Two adapters ship with the crate: `canonical` re-reads the canonical
//! format itself, and `fixture` ingests a simple JSONL capture format used
//! for tests and examples. Unknown event kinds are mapped to `message`
//! events with a metadata note instead of failing, so partially understood
//! logs still produce usable trajectories.

use super::*;
use serde_json::Value;

pub trait Adapter: Send + Sync {
    fn name(&self) -> &str;
    fn ingest(&self, raw: &[u8]) -> Result<Trajectory, TrajectoryError>;
}

pub struct AdapterRegistry {
    adapters: BTreeMap<String, Box<dyn Adapter>>,
}

impl Default for AdapterRegistry {
    fn default() -> Self {
        let mut reg = Self {
            adapters: BTreeMap::new(),
        };
        reg.register(Box::new(CanonicalAdapter));
        reg.register(Box::new(FixtureAdapter));
        reg
    }
}

impl AdapterRegistry {
    pub fn register(&mut self, adapter: Box<dyn Adapter>) {
        self.adapters.insert(adapter.name().to_string(), adapter);
    }

    pub fn names(&self) -> Vec<&str> {
        self.adapters.keys().map(String::as_str).collect()
    }

    pub fn ingest(&self, raw: &[u8], adapter: &str) -> Result<Trajectory, TrajectoryError> {
        let handler = self
            .adapters
            .get(adapter)
            .ok_or_else(|| TrajectoryError::UnknownAdapter(adapter.to_string()))?;
        let trajectory = handler.ingest(raw)?;
        trajectory.validate()?;
        Ok(trajectory)
    }
}

/// Ingest with the default registry.
pub fn ingest_raw_log(raw: &[u8], adapter: &str) -> Result<Trajectory, TrajectoryError> {
    AdapterRegistry::default().ingest(raw, adapter)
}

/// Reads the canonical trajectory format back in.
pub struct CanonicalAdapter;

impl Adapter for CanonicalAdapter {
    fn name(&self) -> &str {
        "canonical"
    }

    fn ingest(&self, raw: &[u8]) -> Result<Trajectory, TrajectoryError> {
        if raw.iter().all(|b| b.is_ascii_whitespace()) {
            return Err(TrajectoryError::Malformed {
                offset: 0,
                reason: "no events".into(),
            });
        }
        canonical_parse(raw)
    }
}

/// Simple JSONL capture format for fixtures.
///
/// Line 1 is a header object: `{"id", "source", "outcome", "capacity"}`.
/// Each following line is one raw record with a `kind` field:
/// `message`, `tool_call`, `tool_result`, `external`, `marker`, `context`.
/// Optional fields on any record: `unit`, `agent`, `branch`, `tokens`
/// (absolute tokens_used override).
pub struct FixtureAdapter;

#[derive(Deserialize)]
struct FixtureHeader {
    id: String,
    source: Source,
    outcome: Outcome,
    capacity: u64,
}

impl Adapter for FixtureAdapter {
    fn name(&self) -> &str {
        "fixture"
    }

    fn ingest(&self, raw: &[u8]) -> Result<Trajectory, TrajectoryError> {
        let text = std::str::from_utf8(raw).map_err(|e| TrajectoryError::Malformed {
            offset: e.valid_up_to(),
            reason: "not valid UTF-8".into(),
        })?;
        if text.trim().is_empty() {
            return Err(TrajectoryError::Malformed {
                offset: 0,
                reason: "no events".into(),
            });
        }
        let mut offset = 0usize;
        let mut lines = Vec::new();
        for line in text.split_inclusive('\n') {
            lines.push((offset, line.trim_end_matches(['\n', '\r'])));
            offset += line.len();
        }
        let (header_offset, header_line) = lines[0];
        let header: FixtureHeader =
            serde_json::from_str(header_line).map_err(|e| TrajectoryError::Malformed {
                offset: header_offset,
                reason: format!("bad header: {e}"),
            })?;
        let mut builder =
            TrajectoryBuilder::new(&header.id, header.source, header.outcome, header.capacity);
        builder.metadata("adapter", "fixture");
        let mut saw_event = false;
        let mut unknown_kinds = Vec::new();
        for &(off, line) in &lines[1..] {
            if line.trim().is_empty() {
                continue;
            }
            let record: Value = serde_json::from_str(line).map_err(|e| TrajectoryError::Malformed {
                offset: off,
                reason: format!("bad record: {e}"),
            })?;
            apply_record(&mut builder, &record, off, &mut unknown_kinds)?;
            saw_event = true;
        }
        if !saw_event {
            return Err(TrajectoryError::Malformed {
                offset: text.len(),
                reason: "no events".into(),
            });
        }
        if !unknown_kinds.is_empty() {
            unknown_kinds.sort();
            unknown_kinds.dedup();
            builder.metadata("unknown_event_kinds", &unknown_kinds.join(","));
        }
        Ok(builder.build())
    }
}

fn apply_record(
    builder: &mut TrajectoryBuilder,
    record: &Value,
    offset: usize,
    unknown_kinds: &mut Vec<String>,
) -> Result<(), TrajectoryError> {
    let malformed = |reason: String| TrajectoryError::Malformed { offset, reason };
    let kind = record
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed("record has no kind".into()))?
        .to_string();
    builder.set_unit(record.get("unit").and_then(Value::as_str));
    builder.set_agent(record.get("agent").and_then(Value::as_str));
    builder.set_branch(record.get("branch").and_then(Value::as_str));
    if let Some(tokens) = record.get("tokens").and_then(Value::as_u64) {
        builder.set_tokens_used(tokens);
        builder.set_tokens_per_event(0);
    }
    let text = record.get("text").and_then(Value::as_str).unwrap_or("");
    match kind.as_str() {
        "message" => {
            builder.message(text);
        }
        "tool_call" => {
            let tool = record
                .get("tool")
                .and_then(Value::as_str)
                .ok_or_else(|| malformed("tool_call has no tool name".into()))?;
            let mut args: Vec<(String, String)> = Vec::new();
            if let Some(map) = record.get("args").and_then(Value::as_object) {
                for (k, v) in map {
                    let v = match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    args.push((k.clone(), v));
                }
            }
            let refs: Vec<(&str, &str)> =
                args.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            builder.tool_call(tool, &refs);
        }
        "tool_result" => {
            let status = match record.get("status").and_then(Value::as_str) {
                Some("pass") | None => ValidationStatus::Pass,
                Some("fail") => ValidationStatus::Fail,
                Some("none") => ValidationStatus::Unchecked,
                Some(other) => return Err(malformed(format!("unknown status {other:?}"))),
            };
            builder.tool_result(text, status);
        }
        "external" => {
            let op = record
                .get("op")
                .and_then(Value::as_str)
                .ok_or_else(|| malformed("external record has no op".into()))?;
            let op_kind: ExternalOpKind = serde_json::from_value(Value::String(op.to_string()))
                .map_err(|_| malformed(format!("unknown external op {op:?}")))?;
            let target = record.get("target").and_then(Value::as_str).unwrap_or("");
            builder.external(op_kind, target);
        }
        "marker" => {
            builder.stage_marker(text);
        }
        "context" => {
            if let Some(seg) = record.get("add_segment") {
                let id = seg
                    .get("id")
                    .and_then(Value::as_str)
                    .ok_or_else(|| malformed("add_segment has no id".into()))?;
                let tokens = seg.get("tokens").and_then(Value::as_u64).unwrap_or(0);
                let tag = match seg.get("tag").and_then(Value::as_str) {
                    Some("rule_text") => SegmentTag::RuleText,
                    Some("retained_summary") => SegmentTag::RetainedSummary,
                    Some("persistent_memory") => SegmentTag::PersistentMemory,
                    Some("raw_content") | None => SegmentTag::RawContent,
                    Some(other) => return Err(malformed(format!("unknown segment tag {other:?}"))),
                };
                builder.add_segment(id, tokens, tag);
            } else if let Some(id) = record.get("drop_segment").and_then(Value::as_str) {
                builder.drop_segment(id);
            } else {
                builder.message(text);
            }
        }
        other => {
            // Common interface over heterogeneous logs: keep the payload.
            unknown_kinds.push(other.to_string());
            builder.message(text);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"{"id":"fx","source":"terminal","outcome":"success","capacity":4096}
{"kind":"message","text":"check the build"}
{"kind":"tool_call","tool":"run_tests","args":{"filter":"all"}}
{"kind":"tool_result","text":"ok","status":"pass"}
"#;

    #[test]
    fn fixture_maps_result_parent() {
        let t = ingest_raw_log(FIXTURE.as_bytes(), "fixture").unwrap();
        assert_eq!(t.events.len(), 3);
        assert_eq!(t.events[2].event_type, EventType::ToolResult);
        assert_eq!(t.events[2].dependency.parent_index, Some(1));
    }

    #[test]
    fn ingestion_is_deterministic() {
        let a = ingest_raw_log(FIXTURE.as_bytes(), "fixture").unwrap();
        let b = ingest_raw_log(FIXTURE.as_bytes(), "fixture").unwrap();
        assert_eq!(canonical_serialize(&a), canonical_serialize(&b));
    }

    #[test]
    fn empty_body_is_malformed() {
        match ingest_raw_log(b"", "fixture") {
            Err(TrajectoryError::Malformed { reason, .. }) => assert!(reason.contains("no events")),
            other => panic!("expected malformed, got {other:?}"),
        }
        match ingest_raw_log(b"  \n", "canonical") {
            Err(TrajectoryError::Malformed { reason, .. }) => assert!(reason.contains("no events")),
            other => panic!("expected malformed, got {other:?}"),
        }
    }

    #[test]
    fn unknown_adapter_is_rejected() {
        assert!(matches!(
            ingest_raw_log(FIXTURE.as_bytes(), "nope"),
            Err(TrajectoryError::UnknownAdapter(_))
        ));
    }

    #[test]
    fn unknown_kind_becomes_message_with_note() {
        let raw = format!("{}{}\n", FIXTURE, r#"{"kind":"telemetry","text":"cpu 42%"}"#);
        let t = ingest_raw_log(raw.as_bytes(), "fixture").unwrap();
        assert_eq!(t.events[3].event_type, EventType::Message);
        assert_eq!(t.metadata.get("unknown_event_kinds").unwrap(), "telemetry");
    }

    #[test]
    fn canonical_round_trips_through_registry() {
        let t = ingest_raw_log(FIXTURE.as_bytes(), "fixture").unwrap();
        let bytes = canonical_serialize(&t);
        let back = ingest_raw_log(&bytes, "canonical").unwrap();
        assert_eq!(back, t);
    }
}
