//! Defect injectors. Each injector plants one canonical instance of a defect
//! into an otherwise finished trajectory and returns the affected spans.
//!
//! Injection arithmetic is tuned against the default `DetectorConfig`
//! (thresholds 0.5): intensity 1.0 always lands above the activation
//! threshold and intensity scales the evidence monotonically. Payload
//! vocabularies are chosen so injectors do not trip detectors for other
//! classes (filler tool names never cluster, never repeat with period <= 4,
//! and appended results are always quoted downstream unless the injector
//! wants them dead).

use super::{Injection, SynthError};
use crate::detectors::DefectClass;
use crate::trajectory::{
    ContextSegment, ContextState, Dependency, Event, EventType, ExternalOperation,
    ExternalOpKind, SegmentTag, ToolInvocation, Trajectory, ValidationResult, ValidationStatus,
};

/// Appends events while keeping the builder's context invariants: cloned
/// segment state, tokens_used >= segment sum, tokens_used <= capacity.
struct Appender {
    events: Vec<Event>,
    capacity: u64,
    unit: Option<String>,
}

impl Appender {
    fn new(t: &Trajectory) -> Self {
        Appender {
            events: t.events.clone(),
            capacity: t.events.last().map(|e| e.context.window_capacity).unwrap_or(1),
            unit: None,
        }
    }

    fn set_unit(&mut self, unit: Option<&str>) {
        self.unit = unit.map(str::to_string);
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        event_type: EventType,
        payload: &str,
        tool: Option<ToolInvocation>,
        validation: Option<ValidationResult>,
        external: Option<ExternalOperation>,
        parent: Option<usize>,
        tokens_used: Option<u64>,
    ) -> usize {
        let index = self.events.len();
        let (segments, prev_used) = self
            .events
            .last()
            .map(|e| (e.context.segments.clone(), e.context.tokens_used))
            .unwrap_or_default();
        let seg_sum: u64 = segments.iter().map(|s| s.token_count).sum();
        let used = tokens_used.unwrap_or(prev_used).max(seg_sum).min(self.capacity);
        self.events.push(Event {
            index,
            event_type,
            payload: payload.to_string(),
            tool,
            validation,
            external,
            context: ContextState {
                tokens_used: used,
                window_capacity: self.capacity,
                segments,
            },
            dependency: Dependency {
                parent_index: parent,
                branch_id: None,
                unit_id: self.unit.clone(),
                agent_id: None,
            },
        });
        index
    }

    fn message(&mut self, payload: &str) -> usize {
        self.push(EventType::Message, payload, None, None, None, None, None)
    }

    fn message_with_tokens(&mut self, payload: &str, tokens_used: u64) -> usize {
        self.push(EventType::Message, payload, None, None, None, None, Some(tokens_used))
    }

    fn call(&mut self, name: &str, args: &[(&str, String)]) -> usize {
        let tool = ToolInvocation {
            tool_name: name.to_string(),
            arguments: args.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        };
        self.push(EventType::ToolCall, "", Some(tool), None, None, None, None)
    }

    fn result(&mut self, call: usize, payload: &str, status: ValidationStatus) -> usize {
        let validation = ValidationResult {
            status,
            detail: String::new(),
        };
        self.push(
            EventType::ToolResult,
            payload,
            None,
            Some(validation),
            None,
            Some(call),
            None,
        )
    }

    fn external(&mut self, kind: ExternalOpKind, target: &str) -> usize {
        let op = ExternalOperation {
            op_kind: kind,
            target: target.to_string(),
        };
        self.push(EventType::ExternalOp, "", None, None, Some(op), None, None)
    }

    fn finish(self, source: &Trajectory) -> Trajectory {
        let mut t = source.clone();
        t.events = self.events;
        t
    }
}

fn count_events(t: &Trajectory, ty: EventType) -> usize {
    t.events.iter().filter(|e| e.event_type == ty).count()
}

/// Plant the defect described by `inj` into `t`. Intensity zero leaves the
/// trajectory untouched. The returned spans cover the planted evidence.
pub fn inject_defect(
    t: &Trajectory,
    inj: &Injection,
    seed: u64,
) -> Result<(Trajectory, Vec<(usize, usize)>), SynthError> {
    if inj.intensity <= 0.0 {
        return Ok((t.clone(), Vec::new()));
    }
    if inj.exempt_variant {
        return match inj.defect {
            DefectClass::GhostContext => Ok(inject_ghost(t, inj, seed, true)),
            DefectClass::DuplicateStep => Ok(inject_exempt_duplicate(t)),
            other => Err(SynthError::Uninjectable {
                defect: other,
                reason: "no exempt variant defined for this class".into(),
            }),
        };
    }
    Ok(match inj.defect {
        DefectClass::GhostContext => inject_ghost(t, inj, seed, false),
        DefectClass::OversizedRules => inject_oversized_rules(t, inj.intensity),
        DefectClass::CwThrashing => inject_cw_thrashing(t, inj.intensity),
        DefectClass::DuplicateStep => inject_duplicate_step(t, inj.intensity),
        DefectClass::ToolCallChain => inject_tool_call_chain(t, inj.intensity),
        DefectClass::DeadStep => inject_dead_step(t, inj.intensity),
        DefectClass::LongChain => inject_long_chain(t, inj.intensity),
        DefectClass::WrapperWorkflow => inject_wrapper_workflow(t, inj.intensity),
        DefectClass::ContextCoupling => inject_context_coupling(t, inj.intensity),
        DefectClass::InconsistentToolInterface => inject_inconsistent_interface(t, inj.intensity),
        DefectClass::WeakTool => inject_weak_tool(t, inj.intensity),
    })
}

/// Largest segment sum already present on any event, so added segments never
/// push an event past its window capacity.
fn max_segment_sum(t: &Trajectory) -> u64 {
    t.events
        .iter()
        .map(|e| e.context.segments.iter().map(|s| s.token_count).sum())
        .max()
        .unwrap_or(0)
}

/// A large retained segment that nothing ever references again. The exempt
/// variant carries a rule_text tag created after event 0, which matches the
/// ghost pattern but is retention-exempt (and invisible to the rules
/// detector, which only looks at segments present from the start).
fn inject_ghost(
    t: &Trajectory,
    inj: &Injection,
    seed: u64,
    exempt: bool,
) -> (Trajectory, Vec<(usize, usize)>) {
    let mut out = t.clone();
    let n = out.events.len();
    // The segment must cover at least half the trajectory to saturate the
    // persistence term, so a hint deep into the event list is pulled back.
    let start = inj.location_hint.unwrap_or(1).clamp(1, (n / 5).max(1));
    let capacity = out.events[0].context.window_capacity;
    let desired = (inj.intensity * 0.30 * capacity as f64).ceil() as u64;
    let tokens = desired.min(capacity.saturating_sub(max_segment_sum(t)));
    if tokens == 0 {
        return (out, Vec::new());
    }
    let seg = ContextSegment {
        // Short id: too few tokens to ever count as a fuzzy reference.
        segment_id: format!("ghostblob{:x}", seed % 4096),
        token_count: tokens,
        created_at: start,
        last_referenced_at: None,
        tag: if exempt { SegmentTag::RuleText } else { SegmentTag::RawContent },
    };
    for ev in &mut out.events[start..] {
        ev.context.segments.push(seg.clone());
        let seg_sum: u64 = ev.context.segments.iter().map(|s| s.token_count).sum();
        ev.context.tokens_used = ev.context.tokens_used.max(seg_sum).min(capacity);
    }
    (out, vec![(start, n - 1)])
}

/// Static rule text occupying (0.25 + 0.5 * intensity) of the window from
/// event 0, which maps back onto a rules score equal to the intensity.
fn inject_oversized_rules(t: &Trajectory, intensity: f64) -> (Trajectory, Vec<(usize, usize)>) {
    let mut out = t.clone();
    let n = out.events.len();
    let capacity = out.events[0].context.window_capacity;
    let desired = ((0.25 + 0.50 * intensity) * capacity as f64).ceil() as u64;
    let tokens = desired.min(capacity.saturating_sub(max_segment_sum(t)));
    if tokens == 0 {
        return (out, Vec::new());
    }
    let seg = ContextSegment {
        segment_id: "rulespack".into(),
        token_count: tokens,
        created_at: 0,
        last_referenced_at: None,
        tag: SegmentTag::RuleText,
    };
    for ev in &mut out.events {
        ev.context.segments.push(seg.clone());
        let seg_sum: u64 = ev.context.segments.iter().map(|s| s.token_count).sum();
        ev.context.tokens_used = ev.context.tokens_used.max(seg_sum).min(capacity);
    }
    (out, vec![(0, n - 1)])
}

/// Saturate-then-compress cycles appended to the tail: tokens_used spikes to
/// 0.95 of capacity and collapses to 0.60 on the next event.
fn inject_cw_thrashing(t: &Trajectory, intensity: f64) -> (Trajectory, Vec<(usize, usize)>) {
    let cycles = (5.0 * intensity).ceil() as usize;
    let mut a = Appender::new(t);
    let capacity = a.capacity;
    let high = (0.95 * capacity as f64) as u64;
    let low = (0.60 * capacity as f64) as u64;
    let mut spans = Vec::new();
    for k in 0..cycles {
        let i = a.message_with_tokens(&format!("press_{k} brim_{k}"), high);
        let j = a.message_with_tokens(&format!("ease_{k} trim_{k}"), low);
        spans.push((i, j));
    }
    (a.finish(t), spans)
}

/// Repeated identical calls with nothing changing in between. Repeats are
/// interleaved with one-off filler calls so the name sequence never forms a
/// periodic run, while pair counts still grow quadratically inside the
/// duplicate window.
fn inject_duplicate_step(t: &Trajectory, intensity: f64) -> (Trajectory, Vec<(usize, usize)>) {
    const FILLERS: [&str; 5] = ["tick_log", "hum_scan", "jot_pad", "nib_mark", "oak_list"];
    let existing = count_events(t, EventType::ToolCall);
    let k = (intensity * existing.max(6) as f64).ceil() as usize;
    let mut a = Appender::new(t);
    let mut dup_calls = Vec::new();
    for i in 0..k {
        let c = a.call("fetch_cache", &[("key", "alpha beta gamma".to_string())]);
        dup_calls.push(c);
        a.result(c, "cache_val steady ledger", ValidationStatus::Pass);
        let f = a.call(FILLERS[i % FILLERS.len()], &[("slot", format!("fill_{i} pad_{i}"))]);
        a.result(f, &format!("fillout_{i} padout_{i}"), ValidationStatus::Pass);
        a.message(&format!("saw fillout_{i} padout_{i}"));
    }
    // Quote the final repeat so only the planted pairs read as duplicates,
    // not as dead results.
    a.message("saw cache_val steady ledger");
    let spans = dup_calls.windows(2).map(|w| (w[0], w[1])).collect();
    (a.finish(t), spans)
}

/// Two identical calls separated by a state mutation: a duplicate candidate
/// the detector must exempt.
fn inject_exempt_duplicate(t: &Trajectory) -> (Trajectory, Vec<(usize, usize)>) {
    let mut a = Appender::new(t);
    let c1 = a.call("fetch_cache", &[("key", "alpha beta gamma".to_string())]);
    a.result(c1, "cache_val steady ledger", ValidationStatus::Pass);
    a.external(ExternalOpKind::FileWrite, "scratch/ledger.txt");
    let c2 = a.call("fetch_cache", &[("key", "alpha beta gamma".to_string())]);
    a.result(c2, "cache_val steady ledger", ValidationStatus::Pass);
    a.message("saw cache_val steady ledger");
    (a.finish(t), vec![(c1, c2)])
}

/// A strict period-2 call pattern long enough to dominate the call sequence.
fn inject_tool_call_chain(t: &Trajectory, intensity: f64) -> (Trajectory, Vec<(usize, usize)>) {
    let existing = count_events(t, EventType::ToolCall);
    let reps = (intensity * existing.max(3) as f64).ceil() as usize;
    let mut a = Appender::new(t);
    let mut first = None;
    let mut last = 0;
    for i in 0..reps {
        let x = a.call("spin_gear", &[("gear", format!("turn_{i}"))]);
        let y = a.call("turn_axle", &[("axle", format!("spin_{i}"))]);
        first.get_or_insert(x);
        last = y;
    }
    let spans = first.map(|f| (f, last)).into_iter().collect();
    (a.finish(t), spans)
}

/// Results nothing downstream ever reads: unique junk payloads, unchecked
/// validation, no external operations.
fn inject_dead_step(t: &Trajectory, intensity: f64) -> (Trajectory, Vec<(usize, usize)>) {
    const NAMES: [&str; 5] = ["vat_scan", "kelp_note", "dune_mark", "fern_list", "moss_grid"];
    let existing = count_events(t, EventType::ToolResult);
    let k = ((2.0 * existing as f64 * intensity).ceil() as usize).max(1);
    let mut a = Appender::new(t);
    let mut spans = Vec::new();
    for i in 0..k {
        let c = a.call(NAMES[i % NAMES.len()], &[("slot", format!("hole_{i} rift_{i}"))]);
        let r = a.result(c, &format!("void_{i} husk_{i}"), ValidationStatus::Unchecked);
        spans.push((c, r));
    }
    (a.finish(t), spans)
}

/// Filler events until the effective (non-marker) length reaches a point
/// where elongation saturates and the existing markers cannot consolidate.
/// Assumes the default baseline (100) and consolidation unit (25).
fn inject_long_chain(t: &Trajectory, intensity: f64) -> (Trajectory, Vec<(usize, usize)>) {
    let markers = t
        .events
        .iter()
        .filter(|e| {
            e.external
                .as_ref()
                .map(|o| {
                    matches!(
                        o.op_kind,
                        ExternalOpKind::StageMarker | ExternalOpKind::Checkpoint
                    )
                })
                .unwrap_or(false)
        })
        .count();
    let eff_clean = t.events.len() - markers;
    // At full intensity the consolidation term stays at or below 0.375, so
    // the score lands at 0.625 or higher.
    let eff_full = ((markers as f64 * 25.0 / 0.375).ceil() as usize).max(300);
    let target = eff_clean + (intensity * eff_full.saturating_sub(eff_clean) as f64).ceil() as usize;
    let mut a = Appender::new(t);
    let mut spans = Vec::new();
    let mut first = None;
    let mut last = 0;
    for i in 0..target.saturating_sub(eff_clean) {
        let idx = a.message(&format!("drift_{i} meander_{i}"));
        first.get_or_insert(idx);
        last = idx;
    }
    if let Some(f) = first {
        spans.push((f, last));
    }
    (a.finish(t), spans)
}

/// A unit that only ever forwards a single unvalidated call. Validated
/// invocations are mixed in below full intensity.
fn inject_wrapper_workflow(t: &Trajectory, intensity: f64) -> (Trajectory, Vec<(usize, usize)>) {
    let total = 6usize;
    let pass_through = ((total as f64 * intensity).ceil() as usize).min(total);
    let mut a = Appender::new(t);
    let mut spans = Vec::new();
    for i in 0..total {
        a.set_unit(None);
        if i == 0 {
            a.message(&format!("route job_{i}"));
        } else {
            // Quoting the previous relay output keeps its result from
            // reading as a dead step.
            let p = i - 1;
            a.message(&format!("saw relayout_{p} sent_{p} route job_{i}"));
        }
        a.set_unit(Some("shim"));
        let c = a.call("forward_relay", &[("job", format!("task_{i} load_{i}"))]);
        let status = if i < pass_through {
            ValidationStatus::Unchecked
        } else {
            ValidationStatus::Pass
        };
        let r = a.result(c, &format!("relayout_{i} sent_{i}"), status);
        if i < pass_through {
            spans.push((c, r));
        }
    }
    a.set_unit(None);
    a.message(&format!("saw relayout_{} sent_{} route done", total - 1, total - 1));
    (a.finish(t), spans)
}

/// Ping-pong delegation between two new units, wired with explicit parent
/// links so the unit graph gains a bidirectional pair, a long alternation
/// run, and a two-node cycle.
fn inject_context_coupling(t: &Trajectory, intensity: f64) -> (Trajectory, Vec<(usize, usize)>) {
    let edges = (8.0 * intensity).ceil() as usize;
    let mut a = Appender::new(t);
    a.set_unit(Some("ping"));
    let first = a.message("volley_0 rally_0");
    let mut prev = first;
    for i in 1..=edges {
        let unit = if i % 2 == 1 { "pong" } else { "ping" };
        a.set_unit(Some(unit));
        prev = a.push(
            EventType::Message,
            &format!("volley_{i} rally_{i}"),
            None,
            None,
            None,
            Some(prev),
            None,
        );
    }
    a.set_unit(None);
    (a.finish(t), vec![(first, prev)])
}

/// Two similarly named tools whose interfaces diverge on `ceil(4 * intensity)`
/// of the four facets: parameter names, parameter types, success output
/// shape, error shape.
fn inject_inconsistent_interface(t: &Trajectory, intensity: f64) -> (Trajectory, Vec<(usize, usize)>) {
    let facets = (4.0 * intensity).ceil() as usize;
    let mut a = Appender::new(t);

    let c1 = a.call("fetch_data", &[("query", "alpha beta".to_string())]);
    a.result(c1, "{\"hits\": 3}", ValidationStatus::Pass);
    a.message("noted hits 3");
    let c2 = a.call("fetch_data", &[("query", "gamma delta".to_string())]);
    a.result(c2, "{\"error\": \"miss\"}", ValidationStatus::Fail);
    a.message("noted error miss");

    let key = if facets >= 1 { "q" } else { "query" };
    let (v1, v2) = if facets >= 2 {
        ("7".to_string(), "9".to_string())
    } else {
        ("epsilon zeta".to_string(), "theta iota".to_string())
    };
    let c3 = a.call("fetch_data_v2", &[(key, v1)]);
    if facets >= 3 {
        a.result(c3, "rows plain listing", ValidationStatus::Pass);
        a.message("noted rows plain listing");
    } else {
        a.result(c3, "{\"hits\": 9}", ValidationStatus::Pass);
        a.message("noted hits 9");
    }
    let c4 = a.call("fetch_data_v2", &[(key, v2)]);
    let last = if facets >= 4 {
        let r = a.result(c4, "failure nope flat", ValidationStatus::Fail);
        a.message("noted failure nope flat");
        r
    } else {
        let r = a.result(c4, "{\"error\": \"nope\"}", ValidationStatus::Fail);
        a.message("noted error nope");
        r
    };
    (a.finish(t), vec![(c1, last + 1)])
}

/// Ten lookup-intent contexts; a fraction of them are answered by the
/// overlapping alternative (grep_all) while the tagged tool (precise_lookup)
/// is never used. The detector only fires once the alternative covers more
/// than its coverage threshold, so the response is a step near full
/// intensity. Requires the synth detector configuration's tags and matchers.
fn inject_weak_tool(t: &Trajectory, intensity: f64) -> (Trajectory, Vec<(usize, usize)>) {
    const BREAKERS: [&str; 4] = ["bolt_rack", "cork_bin", "dune_sled", "flax_coil"];
    let contexts = 10usize;
    let answered = ((contexts as f64 * intensity).ceil() as usize).min(contexts);
    let mut a = Appender::new(t);
    let mut spans = Vec::new();
    let mut breakers = 0usize;
    for i in 0..contexts {
        let m = a.message(&format!("need_lookup target_{i} query_{i}"));
        spans.push((m, m));
        let responder = if i < answered { "grep_all" } else { "hand_sift" };
        let c = a.call(responder, &[("find", format!("target_{i} probe_{i}"))]);
        a.result(c, &format!("hit_{i} found_{i}"), ValidationStatus::Pass);
        a.message(&format!("saw hit_{i} found_{i}"));
        // Break up the responder name run so it never reads as a periodic
        // call chain.
        if i % 3 == 2 {
            let b = a.call(BREAKERS[breakers % BREAKERS.len()], &[("bin", format!("crate_{i}"))]);
            a.result(b, &format!("brk_{i} done_{i}"), ValidationStatus::Pass);
            a.message(&format!("saw brk_{i} done_{i}"));
            breakers += 1;
        }
    }
    (a.finish(t), spans)
}
