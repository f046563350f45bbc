//! Tool-use efficiency detectors: duplicate step, tool call chain, dead
//! step, and long chain.

use super::{clamp01, DefectClass, DetectorConfig, EvidenceRecord, RawFinding};
use crate::text;
use crate::trajectory::{
    build_dependency_graph, EventType, ExternalOpKind, Trajectory, ValidationStatus,
};
use std::collections::BTreeMap;

fn is_state_mutation(kind: ExternalOpKind) -> bool {
    matches!(
        kind,
        ExternalOpKind::FileWrite
            | ExternalOpKind::FileDelete
            | ExternalOpKind::VcsCommit
            | ExternalOpKind::Rollback
    )
}

/// True when the validation status stream changes anywhere in
/// (start, end), seeded with the last status at or before start.
fn validation_changes_between(t: &Trajectory, start: usize, end: usize) -> bool {
    let mut last: Option<ValidationStatus> = None;
    for ev in &t.events[..=start] {
        if let Some(v) = &ev.validation {
            if v.status != ValidationStatus::Unchecked {
                last = Some(v.status);
            }
        }
    }
    for ev in &t.events[start + 1..end] {
        if let Some(v) = &ev.validation {
            if v.status == ValidationStatus::Unchecked {
                continue;
            }
            if let Some(prev) = last {
                if prev != v.status {
                    return true;
                }
            }
            last = Some(v.status);
        }
    }
    false
}

fn mutation_between(t: &Trajectory, start: usize, end: usize) -> bool {
    t.events[start + 1..end]
        .iter()
        .any(|ev| ev.external.as_ref().map(|o| is_state_mutation(o.op_kind)).unwrap_or(false))
}

/// Near-identical tool calls with no substantive state change in between.
/// Exempt: intervening mutations, tools configured as time-varying, and
/// calls inside declared batch units.
pub fn detect_duplicate_step(t: &Trajectory, cfg: &DetectorConfig) -> RawFinding {
    let threshold = cfg.threshold(DefectClass::DuplicateStep);
    let calls: Vec<&crate::trajectory::Event> = t
        .events
        .iter()
        .filter(|e| e.event_type == EventType::ToolCall)
        .collect();
    let call_tokens: Vec<_> = calls
        .iter()
        .map(|c| text::token_set(&c.tool.as_ref().expect("tool_call has tool").flattened()))
        .collect();

    let mut counted = 0usize;
    let mut exempt_reasons: Vec<&str> = Vec::new();
    let mut candidates = 0usize;
    let mut spans = Vec::new();
    for a in 0..calls.len() {
        for b in (a + 1)..calls.len() {
            let (i, j) = (calls[a].index, calls[b].index);
            if j - i > cfg.dup_window {
                break;
            }
            if text::jaccard(&call_tokens[a], &call_tokens[b]) < cfg.dup_similarity {
                continue;
            }
            candidates += 1;
            let tool_name = &calls[a].tool.as_ref().expect("tool").tool_name;
            if cfg.time_varying_tools.contains(tool_name) {
                exempt_reasons.push("time-varying tool");
                continue;
            }
            let in_batch = |ev: &crate::trajectory::Event| {
                ev.dependency
                    .unit_id
                    .as_ref()
                    .map(|u| cfg.batch_units.contains(u))
                    .unwrap_or(false)
            };
            if in_batch(calls[a]) && in_batch(calls[b]) {
                exempt_reasons.push("declared batch unit");
                continue;
            }
            if mutation_between(t, i, j) {
                exempt_reasons.push("rerun after intervening mutation");
                continue;
            }
            if validation_changes_between(t, i, j) {
                exempt_reasons.push("validation state changed");
                continue;
            }
            counted += 1;
            spans.push((i, j));
        }
    }

    let total_calls = calls.len();
    let score = if total_calls == 0 {
        0.0
    } else {
        clamp01(counted as f64 / total_calls as f64)
    };
    let exempt = if counted == 0 && candidates > 0 {
        exempt_reasons.sort();
        exempt_reasons.dedup();
        Some(format!(
            "all {candidates} similar pairs exempt: {}",
            exempt_reasons.join(", ")
        ))
    } else {
        None
    };
    let mut features = BTreeMap::new();
    features.insert("duplicate_pairs".into(), counted as f64);
    features.insert("candidate_pairs".into(), candidates as f64);
    features.insert("tool_calls".into(), total_calls as f64);
    let evidence = EvidenceRecord {
        defect: DefectClass::DuplicateStep,
        features,
        score,
        supporting_spans: spans,
    };
    RawFinding::from_evidence(evidence, threshold, exempt)
}

/// Longest run of the tool-name sequence that is periodic with period
/// <= max_period and covers at least min_reps repetitions.
pub fn longest_periodic_run(names: &[&str], max_period: usize, min_reps: usize) -> usize {
    let n = names.len();
    let mut best = 0usize;
    for period in 1..=max_period.min(n) {
        let mut run = period; // length of current periodic stretch
        for i in period..n {
            if names[i] == names[i - period] {
                run += 1;
            } else {
                run = period;
            }
            if run >= period * min_reps {
                best = best.max(run);
            }
        }
    }
    best
}

/// Cyclic or oscillatory local call patterns, including same-tool retries.
pub fn detect_tool_call_chain(t: &Trajectory, cfg: &DetectorConfig) -> RawFinding {
    let threshold = cfg.threshold(DefectClass::ToolCallChain);
    let calls: Vec<(usize, &str)> = t
        .events
        .iter()
        .filter(|e| e.event_type == EventType::ToolCall)
        .map(|e| (e.index, e.tool.as_ref().expect("tool").tool_name.as_str()))
        .collect();
    let names: Vec<&str> = calls.iter().map(|(_, n)| *n).collect();
    let run = longest_periodic_run(&names, cfg.max_period, cfg.min_reps);
    let score = if names.is_empty() {
        0.0
    } else {
        clamp01(run as f64 / names.len() as f64)
    };
    let mut features = BTreeMap::new();
    features.insert("longest_periodic_run".into(), run as f64);
    features.insert("tool_calls".into(), names.len() as f64);
    let spans = if run > 0 {
        // Report the whole call region; precise run location is secondary.
        vec![(calls[0].0, calls[calls.len() - 1].0)]
    } else {
        Vec::new()
    };
    let evidence = EvidenceRecord {
        defect: DefectClass::ToolCallChain,
        features,
        score,
        supporting_spans: spans,
    };
    RawFinding::from_evidence(evidence, threshold, None)
}

/// Results with no downstream influence. A step with any observable
/// external operation is never dead.
pub fn detect_dead_step(t: &Trajectory, cfg: &DetectorConfig) -> RawFinding {
    let threshold = cfg.threshold(DefectClass::DeadStep);
    let graph = build_dependency_graph(t, &cfg.graph_config());
    let results: Vec<&crate::trajectory::Event> = t
        .events
        .iter()
        .filter(|e| e.event_type == EventType::ToolResult)
        .collect();

    let mut dead = 0usize;
    let mut spans = Vec::new();
    for r in &results {
        if graph.has_outgoing_data_flow(r.index) {
            continue;
        }
        let parent = r.dependency.parent_index;
        let step_has_external = |idx: Option<usize>| {
            idx.and_then(|i| t.events.get(i))
                .map(|e| e.external.is_some())
                .unwrap_or(false)
        };
        if step_has_external(Some(r.index)) || step_has_external(parent) {
            continue;
        }
        // Branch decision or state update attached to the step.
        let branch_change = parent
            .and_then(|p| t.events.get(p))
            .map(|p| p.dependency.branch_id != r.dependency.branch_id)
            .unwrap_or(false);
        if branch_change {
            continue;
        }
        dead += 1;
        spans.push((parent.unwrap_or(r.index), r.index));
    }
    let score = if results.is_empty() {
        0.0
    } else {
        clamp01(dead as f64 / results.len() as f64)
    };
    let mut features = BTreeMap::new();
    features.insert("dead_results".into(), dead as f64);
    features.insert("total_results".into(), results.len() as f64);
    let evidence = EvidenceRecord {
        defect: DefectClass::DeadStep,
        features,
        score,
        supporting_spans: spans,
    };
    RawFinding::from_evidence(evidence, threshold, None)
}

/// Persistent elongation without consolidation. Marker events do not count
/// toward the effective length, so adding a marker can only lower the score.
pub fn detect_long_chain(t: &Trajectory, cfg: &DetectorConfig) -> RawFinding {
    let threshold = cfg.threshold(DefectClass::LongChain);
    let is_marker = |ev: &crate::trajectory::Event| {
        ev.external
            .as_ref()
            .map(|o| {
                matches!(
                    o.op_kind,
                    ExternalOpKind::StageMarker | ExternalOpKind::Checkpoint
                )
            })
            .unwrap_or(false)
    };
    let markers = t.events.iter().filter(|e| is_marker(e)).count();
    let effective_len = t.events.len() - markers;
    let baseline = cfg.length_baseline(t.source).max(1);
    let elongation = clamp01((effective_len as f64 - baseline as f64) / baseline as f64);
    let consolidation = if effective_len == 0 {
        1.0
    } else {
        clamp01(markers as f64 * cfg.consolidation_unit as f64 / effective_len as f64)
    };
    let score = elongation * (1.0 - consolidation);
    let mut features = BTreeMap::new();
    features.insert("effective_length".into(), effective_len as f64);
    features.insert("markers".into(), markers as f64);
    features.insert("consolidation_rate".into(), consolidation);
    let spans = if score > 0.0 {
        vec![(0, t.events.len().saturating_sub(1))]
    } else {
        Vec::new()
    };
    let evidence = EvidenceRecord {
        defect: DefectClass::LongChain,
        features,
        score,
        supporting_spans: spans,
    };
    RawFinding::from_evidence(evidence, threshold, None)
}
