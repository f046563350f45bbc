//! Workflow-architecture detectors: wrapper workflow and context coupling.

use super::{clamp01, DefectClass, DetectorConfig, EvidenceRecord, RawFinding};
use crate::trajectory::{
    build_dependency_graph, strongly_connected_components, EventType, Trajectory,
    ValidationStatus,
};
use std::collections::{BTreeMap, BTreeSet};

/// A unit invocation: one maximal contiguous run of events sharing a unit id.
struct Invocation {
    start: usize,
    end: usize,
    tool_calls: usize,
    has_validation: bool,
    branch_change: bool,
    retry_after_fail: bool,
}

fn unit_invocations(t: &Trajectory) -> BTreeMap<String, Vec<Invocation>> {
    let mut runs: BTreeMap<String, Vec<Invocation>> = BTreeMap::new();
    let mut current: Option<(String, Invocation, Option<String>, bool)> = None;
    for ev in &t.events {
        let unit = ev.dependency.unit_id.clone();
        let same = current
            .as_ref()
            .map(|(u, ..)| Some(u) == unit.as_ref())
            .unwrap_or(false);
        if !same {
            if let Some((u, inv, ..)) = current.take() {
                runs.entry(u).or_default().push(inv);
            }
            if let Some(u) = unit.clone() {
                current = Some((
                    u,
                    Invocation {
                        start: ev.index,
                        end: ev.index,
                        tool_calls: 0,
                        has_validation: false,
                        branch_change: false,
                        retry_after_fail: false,
                    },
                    ev.dependency.branch_id.clone(),
                    false,
                ));
            }
        }
        if let Some((_, inv, branch, failed)) = current.as_mut() {
            inv.end = ev.index;
            if ev.event_type == EventType::ToolCall {
                if *failed {
                    inv.retry_after_fail = true;
                }
                inv.tool_calls += 1;
            }
            if let Some(v) = &ev.validation {
                match v.status {
                    ValidationStatus::Pass => inv.has_validation = true,
                    ValidationStatus::Fail => {
                        inv.has_validation = true;
                        *failed = true;
                    }
                    ValidationStatus::Unchecked => {}
                }
            }
            if ev.dependency.branch_id != *branch {
                inv.branch_change = true;
            }
        }
    }
    if let Some((u, inv, ..)) = current.take() {
        runs.entry(u).or_default().push(inv);
    }
    runs
}

/// Units that only ever forward a single call without validating,
/// aggregating, routing, or handling faults.
pub fn detect_wrapper_workflow(t: &Trajectory, cfg: &DetectorConfig) -> RawFinding {
    let threshold = cfg.threshold(DefectClass::WrapperWorkflow);
    let runs = unit_invocations(t);
    let mut best = 0.0f64;
    let mut best_unit_spans = Vec::new();
    let mut units_considered = 0usize;
    for invocations in runs.values() {
        if invocations.len() < cfg.min_invocations {
            continue;
        }
        units_considered += 1;
        let pass_through: Vec<&Invocation> = invocations
            .iter()
            .filter(|inv| {
                inv.tool_calls == 1
                    && !inv.has_validation
                    && !inv.branch_change
                    && !inv.retry_after_fail
            })
            .collect();
        let fraction = pass_through.len() as f64 / invocations.len() as f64;
        if fraction > best {
            best = fraction;
            best_unit_spans = pass_through.iter().map(|inv| (inv.start, inv.end)).collect();
        }
    }
    let mut features = BTreeMap::new();
    features.insert("units_considered".into(), units_considered as f64);
    features.insert("max_pass_through_fraction".into(), best);
    let evidence = EvidenceRecord {
        defect: DefectClass::WrapperWorkflow,
        features,
        score: clamp01(best),
        supporting_spans: best_unit_spans,
    };
    RawFinding::from_evidence(evidence, threshold, None)
}

/// Bidirectional unit dependencies, ping-pong alternation, and strongly
/// connected components in the unit interaction graph. An SCC of
/// `scc_force_size` or more forces activation regardless of other features.
pub fn detect_context_coupling(t: &Trajectory, cfg: &DetectorConfig) -> RawFinding {
    let threshold = cfg.threshold(DefectClass::ContextCoupling);
    let graph = build_dependency_graph(t, &cfg.graph_config());
    let calls = graph.unit_call_sequence();

    let distinct: BTreeSet<(String, String)> = calls.iter().cloned().collect();
    let bidirectional = distinct
        .iter()
        .filter(|(a, b)| a < b && distinct.contains(&(b.clone(), a.clone())))
        .count();

    // Longest chain of consecutive edges each reversing the previous one.
    let mut alternation = 0usize;
    let mut run = if calls.is_empty() { 0 } else { 1 };
    for w in calls.windows(2) {
        let reversed = w[1].0 == w[0].1 && w[1].1 == w[0].0;
        run = if reversed { run + 1 } else { 1 };
        if run >= cfg.min_alternation {
            alternation = alternation.max(run);
        }
    }

    let units: Vec<String> = graph.units.clone();
    let unit_pos: BTreeMap<&str, usize> = units
        .iter()
        .enumerate()
        .map(|(i, u)| (u.as_str(), i))
        .collect();
    let index_edges: Vec<(usize, usize)> = distinct
        .iter()
        .map(|(a, b)| (unit_pos[a.as_str()], unit_pos[b.as_str()]))
        .collect();
    let largest_scc = strongly_connected_components(units.len(), &index_edges)
        .iter()
        .map(Vec::len)
        .max()
        .unwrap_or(0);

    let [w_bidir, w_alt, w_scc] = cfg.coupling_weights;
    let bidir_norm = clamp01(bidirectional as f64 / cfg.bidirectional_cap);
    let alt_norm = clamp01(alternation as f64 / cfg.alternation_cap);
    let scc_norm = clamp01((largest_scc.saturating_sub(1)) as f64 / (cfg.scc_cap - 1.0).max(1.0));
    let mut score = clamp01(w_bidir * bidir_norm + w_alt * alt_norm + w_scc * scc_norm);
    if largest_scc >= cfg.scc_force_size {
        score = score.max(threshold);
    }

    let mut features = BTreeMap::new();
    features.insert("bidirectional_pairs".into(), bidirectional as f64);
    features.insert("longest_alternation".into(), alternation as f64);
    features.insert("largest_scc".into(), largest_scc as f64);
    let evidence = EvidenceRecord {
        defect: DefectClass::ContextCoupling,
        features,
        score,
        supporting_spans: Vec::new(),
    };
    RawFinding::from_evidence(evidence, threshold, None)
}
