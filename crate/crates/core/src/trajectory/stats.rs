//! Per-segment context statistics: occupancy, downstream reference rate,
//! and persistence. These feed the context-management detectors.

use super::*;
use crate::text;
use std::collections::BTreeSet;

/// Minimum shared-token count for a fuzzy segment reference.
pub const SEGMENT_REF_MIN_TOKENS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub segment_id: String,
    pub tag: SegmentTag,
    /// Mean token_count / window_capacity over events where present.
    pub occupancy: f64,
    /// Referencing events after creation divided by persistence.
    pub reference_rate: f64,
    /// Last event index present minus created_at.
    pub persistence: usize,
    pub created_at: usize,
    pub last_present: usize,
    pub reference_count: usize,
}

/// One record per segment id ever present in the trajectory.
pub fn context_segment_stats(t: &Trajectory) -> Vec<SegmentStats> {
    struct Acc {
        tag: SegmentTag,
        created_at: usize,
        last_present: usize,
        occupancy_sum: f64,
        present_count: usize,
        reference_count: usize,
        id_tokens: BTreeSet<String>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, Acc> = BTreeMap::new();

    for ev in &t.events {
        for seg in &ev.context.segments {
            let entry = acc.entry(seg.segment_id.clone()).or_insert_with(|| {
                order.push(seg.segment_id.clone());
                Acc {
                    tag: seg.tag,
                    created_at: seg.created_at,
                    last_present: ev.index,
                    occupancy_sum: 0.0,
                    present_count: 0,
                    reference_count: 0,
                    id_tokens: text::token_set(&seg.segment_id.replace('_', " ")),
                }
            });
            entry.tag = seg.tag;
            entry.last_present = ev.index;
            entry.occupancy_sum += seg.token_count as f64 / ev.context.window_capacity as f64;
            entry.present_count += 1;
        }
    }

    // A reference is an exact segment-id mention or a sizable token overlap
    // between the segment-id tokens and the event text.
    for ev in &t.events {
        let lower_payload = ev.payload.to_lowercase();
        let tool_text = ev.tool.as_ref().map(|t| t.flattened().to_lowercase());
        let event_tokens = {
            let mut set = text::token_set(&ev.payload);
            if let Some(tt) = &tool_text {
                set.extend(text::token_set(tt));
            }
            set
        };
        for (id, entry) in acc.iter_mut() {
            if ev.index <= entry.created_at {
                continue;
            }
            let id_lower = id.to_lowercase();
            let exact = lower_payload.contains(&id_lower)
                || tool_text.as_ref().map(|t| t.contains(&id_lower)).unwrap_or(false);
            let fuzzy = !entry.id_tokens.is_empty()
                && text::shared_tokens(&entry.id_tokens, &event_tokens) >= SEGMENT_REF_MIN_TOKENS;
            if exact || fuzzy {
                entry.reference_count += 1;
            }
        }
    }

    order
        .into_iter()
        .map(|id| {
            let a = &acc[&id];
            let persistence = a.last_present.saturating_sub(a.created_at);
            let reference_rate = if persistence > 0 {
                a.reference_count as f64 / persistence as f64
            } else {
                0.0
            };
            SegmentStats {
                segment_id: id,
                tag: a.tag,
                occupancy: if a.present_count > 0 {
                    a.occupancy_sum / a.present_count as f64
                } else {
                    0.0
                },
                reference_rate,
                persistence,
                created_at: a.created_at,
                last_present: a.last_present,
                reference_count: a.reference_count,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_event_segment_has_zero_persistence() {
        let mut b = TrajectoryBuilder::new("s", Source::Other, Outcome::Unknown, 1000);
        b.add_segment("only", 10, SegmentTag::RawContent);
        b.drop_segment("only");
        let stats = context_segment_stats(&b.build());
        assert_eq!(stats[0].persistence, 0);
        assert_eq!(stats[0].reference_rate, 0.0);
    }

    #[test]
    fn zero_token_segment_has_zero_occupancy() {
        let mut b = TrajectoryBuilder::new("s", Source::Other, Outcome::Unknown, 1000);
        b.add_segment("empty", 0, SegmentTag::RawContent);
        b.message("later");
        let stats = context_segment_stats(&b.build());
        assert_eq!(stats[0].occupancy, 0.0);
    }

    #[test]
    fn fixture_matches_hand_computed_values() {
        // 3000-token segment, 10000 capacity, persists 50 events after
        // creation, referenced twice.
        let mut b = TrajectoryBuilder::new("s", Source::Other, Outcome::Unknown, 10_000);
        b.set_tokens_per_event(80);
        b.add_segment("big_dump", 3000, SegmentTag::RawContent);
        for i in 1..=50 {
            match i {
                10 => b.message("check big_dump for details"),
                30 => b.message("big_dump again"),
                _ => b.message("routine step"),
            };
        }
        let t = b.build();
        let stats = context_segment_stats(&t);
        let seg = stats.iter().find(|s| s.segment_id == "big_dump").unwrap();
        assert!((seg.occupancy - 0.30).abs() < 1e-12);
        assert_eq!(seg.persistence, 50);
        assert!((seg.reference_rate - 0.04).abs() < 1e-12);
    }
}
