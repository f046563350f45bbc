//! Context-management detectors: ghost context, oversized rules, and
//! context-window thrashing.

use super::{clamp01, DefectClass, DetectorConfig, EvidenceRecord, RawFinding};
use crate::trajectory::{context_segment_stats, SegmentTag, Trajectory};
use std::collections::BTreeMap;

/// High occupancy, low reference, long persistence over a retained segment.
/// Rule text, retained summaries, and persistent memory are exempt.
pub fn detect_ghost_context(t: &Trajectory, cfg: &DetectorConfig) -> RawFinding {
    let threshold = cfg.threshold(DefectClass::GhostContext);
    let stats = context_segment_stats(t);
    let horizon = (t.events.len().saturating_sub(1)).max(1) as f64;
    let persistence_cap = (cfg.ghost_persistence_frac * horizon).max(1.0);

    let ghost_score = |occupancy: f64, reference_rate: f64, persistence: usize| {
        let occ = clamp01(occupancy / cfg.ghost_occupancy_cap);
        let pers = clamp01(persistence as f64 / persistence_cap);
        let refs = clamp01(reference_rate / cfg.ghost_reference_cap);
        occ * pers * (1.0 - refs)
    };

    let mut best_score = 0.0;
    let mut best_span: Option<(usize, usize)> = None;
    let mut exempt_hit: Option<String> = None;
    for seg in &stats {
        let score = ghost_score(seg.occupancy, seg.reference_rate, seg.persistence);
        if seg.tag.is_retention_exempt() {
            if score >= threshold && exempt_hit.is_none() {
                exempt_hit = Some(format!(
                    "segment {} matches the ghost pattern but carries retained tag {:?}",
                    seg.segment_id, seg.tag
                ));
            }
            continue;
        }
        if score > best_score {
            best_score = score;
            best_span = Some((seg.created_at, seg.last_present));
        }
    }

    let mut features = BTreeMap::new();
    features.insert("segment_count".into(), stats.len() as f64);
    features.insert("max_ghost_score".into(), best_score);
    let evidence = EvidenceRecord {
        defect: DefectClass::GhostContext,
        features,
        score: clamp01(best_score),
        supporting_spans: best_span.into_iter().collect(),
    };
    RawFinding::from_evidence(evidence, threshold, exempt_hit)
}

/// Static rule overhead: mean occupancy of rule_text segments present from
/// the start, mapped through clamp((rho - base) / span).
pub fn detect_oversized_rules(t: &Trajectory, cfg: &DetectorConfig) -> RawFinding {
    let threshold = cfg.threshold(DefectClass::OversizedRules);
    let mut occupancy_sum = 0.0;
    let mut events_counted = 0usize;
    let mut last_present = 0usize;
    for ev in &t.events {
        let rule_tokens: u64 = ev
            .context
            .segments
            .iter()
            .filter(|s| s.tag == SegmentTag::RuleText && s.created_at == 0)
            .map(|s| s.token_count)
            .sum();
        if rule_tokens > 0 {
            last_present = ev.index;
        }
        occupancy_sum += rule_tokens as f64 / ev.context.window_capacity as f64;
        events_counted += 1;
    }
    let rho_rules = if events_counted > 0 {
        occupancy_sum / events_counted as f64
    } else {
        0.0
    };
    let score = clamp01((rho_rules - cfg.rules_base) / cfg.rules_span);

    let mut features = BTreeMap::new();
    features.insert("rule_occupancy".into(), rho_rules);
    let spans = if score > 0.0 {
        vec![(0, last_present)]
    } else {
        Vec::new()
    };
    let evidence = EvidenceRecord {
        defect: DefectClass::OversizedRules,
        features,
        score,
        supporting_spans: spans,
    };
    RawFinding::from_evidence(evidence, threshold, None)
}

/// Saturate-then-compress cycles in the tokens_used series. A cycle is a
/// rise above the saturation level followed by a drop of at least `drop`
/// within `delta` events. Defaults require three cycles before activation
/// (cycle_cap 5 with threshold 0.5).
pub fn detect_cw_thrashing(t: &Trajectory, cfg: &DetectorConfig) -> RawFinding {
    let threshold = cfg.threshold(DefectClass::CwThrashing);
    let mut cycles = 0usize;
    let mut spans = Vec::new();
    let events = &t.events;
    let mut i = 0usize;
    while i < events.len() {
        let ctx = &events[i].context;
        let saturated = ctx.tokens_used as f64 >= cfg.saturation * ctx.window_capacity as f64;
        if saturated {
            let peak = ctx.tokens_used as f64;
            let mut matched = None;
            for j in (i + 1)..events.len().min(i + 1 + cfg.delta) {
                let used = events[j].context.tokens_used as f64;
                if peak - used >= cfg.drop * peak {
                    matched = Some(j);
                    break;
                }
            }
            if let Some(j) = matched {
                cycles += 1;
                spans.push((i, j));
                i = j + 1;
                continue;
            }
        }
        i += 1;
    }
    let score = clamp01(cycles as f64 / cfg.cycle_cap as f64);
    let mut features = BTreeMap::new();
    features.insert("thrash_cycles".into(), cycles as f64);
    let evidence = EvidenceRecord {
        defect: DefectClass::CwThrashing,
        features,
        score,
        supporting_spans: spans,
    };
    RawFinding::from_evidence(evidence, threshold, None)
}
