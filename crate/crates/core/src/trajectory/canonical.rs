//! Canonical line-delimited trajectory format.
//!
//! One header record followed by one record per event. Field order is fixed
//! by struct declaration order, map keys are sorted, and all counts are
//! integers, so equal trajectories serialize to identical bytes. Field names
//! are frozen in docs/format.md and covered by golden-file tests.

use super::*;

pub const TRAJECTORY_SCHEMA: &str = "trajlens.trajectory.v1";

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    record: String,
    schema: String,
    trajectory_id: String,
    source: Source,
    outcome: Outcome,
    metadata: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct EventLine {
    record: String,
    #[serde(flatten)]
    event: Event,
}

pub fn canonical_serialize(t: &Trajectory) -> Vec<u8> {
    let mut out = Vec::new();
    let header = HeaderLine {
        record: "header".into(),
        schema: TRAJECTORY_SCHEMA.into(),
        trajectory_id: t.trajectory_id.clone(),
        source: t.source,
        outcome: t.outcome,
        metadata: t.metadata.clone(),
    };
    out.extend_from_slice(serde_json::to_string(&header).expect("header serializes").as_bytes());
    out.push(b'\n');
    for event in &t.events {
        let line = EventLine {
            record: "event".into(),
            event: event.clone(),
        };
        out.extend_from_slice(serde_json::to_string(&line).expect("event serializes").as_bytes());
        out.push(b'\n');
    }
    out
}

pub fn canonical_parse(bytes: &[u8]) -> Result<Trajectory, TrajectoryError> {
    let text = std::str::from_utf8(bytes).map_err(|e| TrajectoryError::Parse {
        line: 1,
        reason: format!("not valid UTF-8: {e}"),
    })?;
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines.next().ok_or(TrajectoryError::Parse {
        line: 1,
        reason: "empty input".into(),
    })?;
    let header: HeaderLine = serde_json::from_str(header_line).map_err(|e| TrajectoryError::Parse {
        line: 1,
        reason: format!("bad header: {e}"),
    })?;
    if header.record != "header" {
        return Err(TrajectoryError::Parse {
            line: 1,
            reason: format!("expected header record, got {:?}", header.record),
        });
    }
    if header.schema != TRAJECTORY_SCHEMA {
        return Err(TrajectoryError::Parse {
            line: 1,
            reason: format!("unsupported schema {:?}", header.schema),
        });
    }
    let mut events = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            return Err(TrajectoryError::Parse {
                line: lineno,
                reason: "blank line inside trajectory".into(),
            });
        }
        let parsed: EventLine = serde_json::from_str(line).map_err(|e| TrajectoryError::Parse {
            line: lineno,
            reason: format!("bad event record: {e}"),
        })?;
        if parsed.record != "event" {
            return Err(TrajectoryError::Parse {
                line: lineno,
                reason: format!("expected event record, got {:?}", parsed.record),
            });
        }
        if parsed.event.index != events.len() {
            return Err(TrajectoryError::Parse {
                line: lineno,
                reason: format!(
                    "out-of-order event index {} (expected {})",
                    parsed.event.index,
                    events.len()
                ),
            });
        }
        events.push(parsed.event);
    }
    let trajectory = Trajectory {
        trajectory_id: header.trajectory_id,
        source: header.source,
        outcome: header.outcome,
        events,
        metadata: header.metadata,
    };
    trajectory.validate()?;
    Ok(trajectory)
}
