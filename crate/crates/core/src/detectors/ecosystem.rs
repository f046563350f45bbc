//! Tool-ecosystem detectors: inconsistent tool interfaces and weak tools.

use super::{clamp01, DefectClass, DetectorConfig, EvidenceRecord, RawFinding};
use crate::trajectory::{EventType, Trajectory, ValidationStatus};
use std::collections::{BTreeMap, BTreeSet};

/// Lowercase alphanumeric fragments of a tool name; underscores split too.
fn name_tokens(name: &str) -> BTreeSet<String> {
    name.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn name_similarity(a: &str, b: &str) -> f64 {
    let ta = name_tokens(a);
    let tb = name_tokens(b);
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let inter = ta.intersection(&tb).count() as f64;
    let union = ta.union(&tb).count() as f64;
    if union == 0.0 {
        0.0
    } else {
        inter / union
    }
}

fn value_type(raw: &str) -> &'static str {
    let v = raw.trim();
    if v.eq_ignore_ascii_case("true") || v.eq_ignore_ascii_case("false") {
        "bool"
    } else if v.parse::<i64>().is_ok() {
        "int"
    } else if v.parse::<f64>().is_ok() {
        "float"
    } else {
        "text"
    }
}

/// Coarse structural shape of a result payload, stable under value changes.
fn payload_shape(payload: &str) -> String {
    match serde_json::from_str::<serde_json::Value>(payload.trim()) {
        Ok(serde_json::Value::Object(map)) => {
            let keys: Vec<&str> = map.keys().map(String::as_str).collect();
            format!("object{{{}}}", keys.join(","))
        }
        Ok(serde_json::Value::Array(_)) => "array".into(),
        Ok(serde_json::Value::String(_)) => "json_string".into(),
        Ok(serde_json::Value::Number(_)) => "number".into(),
        Ok(serde_json::Value::Bool(_)) => "bool".into(),
        Ok(serde_json::Value::Null) => "null".into(),
        Err(_) if payload.contains('\n') => "lines".into(),
        Err(_) => "text".into(),
    }
}

#[derive(Default)]
struct InterfaceProfile {
    param_names: BTreeSet<String>,
    param_types: BTreeSet<&'static str>,
    output_shapes: BTreeSet<String>,
    error_shapes: BTreeSet<String>,
}

fn interface_profiles(t: &Trajectory) -> BTreeMap<String, InterfaceProfile> {
    let mut profiles: BTreeMap<String, InterfaceProfile> = BTreeMap::new();
    for ev in &t.events {
        match ev.event_type {
            EventType::ToolCall => {
                if let Some(tool) = &ev.tool {
                    let p = profiles.entry(tool.tool_name.clone()).or_default();
                    for (key, value) in &tool.arguments {
                        p.param_names.insert(key.clone());
                        p.param_types.insert(value_type(value));
                    }
                }
            }
            EventType::ToolResult => {
                let Some(name) = ev
                    .dependency
                    .parent_index
                    .and_then(|p| t.events[p].tool.as_ref())
                    .map(|tool| tool.tool_name.clone())
                else {
                    continue;
                };
                let shape = payload_shape(&ev.payload);
                let profile = profiles.entry(name).or_default();
                let failed = ev
                    .validation
                    .as_ref()
                    .map(|v| v.status == ValidationStatus::Fail)
                    .unwrap_or(false);
                if failed {
                    profile.error_shapes.insert(shape);
                } else {
                    profile.output_shapes.insert(shape);
                }
            }
            _ => {}
        }
    }
    profiles
}

/// Fraction of the four interface facets (parameter names, parameter types,
/// output structure, error-return format) that disagree between a pair.
/// Unobserved facets on both sides compare equal.
fn mismatch_ratio(a: &InterfaceProfile, b: &InterfaceProfile) -> f64 {
    let mismatches = [
        a.param_names != b.param_names,
        a.param_types != b.param_types,
        a.output_shapes != b.output_shapes,
        a.error_shapes != b.error_shapes,
    ]
    .iter()
    .filter(|&&m| m)
    .count();
    mismatches as f64 / 4.0
}

/// Tools with similar names that present divergent interfaces.
pub fn detect_inconsistent_tool_interface(t: &Trajectory, cfg: &DetectorConfig) -> RawFinding {
    let threshold = cfg.threshold(DefectClass::InconsistentToolInterface);
    let profiles = interface_profiles(t);
    let names: Vec<&String> = profiles.keys().collect();

    // Single-link clustering over name similarity, via union-find.
    let n = names.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if name_similarity(names[i], names[j]) >= cfg.cluster_sim {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        clusters.entry(r).or_default().push(i);
    }

    let mut score = 0.0f64;
    let mut cluster_count = 0usize;
    for members in clusters.values() {
        if members.len() < 2 {
            continue;
        }
        cluster_count += 1;
        for (a, i) in members.iter().enumerate() {
            for j in &members[a + 1..] {
                let ratio = mismatch_ratio(&profiles[names[*i]], &profiles[names[*j]]);
                score = score.max(ratio);
            }
        }
    }

    let mut features = BTreeMap::new();
    features.insert("tool_count".into(), n as f64);
    features.insert("cluster_count".into(), cluster_count as f64);
    features.insert("max_mismatch_ratio".into(), score);
    let evidence = EvidenceRecord {
        defect: DefectClass::InconsistentToolInterface,
        features,
        score: clamp01(score),
        supporting_spans: Vec::new(),
    };
    RawFinding::from_evidence(evidence, threshold, None)
}

/// Declared tools that are nearly never invoked in contexts their capability
/// tags mark as appropriate, while an overlapping alternative covers those
/// contexts. Needs cfg-provided tags and intent matchers; without them the
/// finding is inapplicable.
pub fn detect_weak_tool(t: &Trajectory, cfg: &DetectorConfig) -> RawFinding {
    let threshold = cfg.threshold(DefectClass::WeakTool);
    let mut features = BTreeMap::new();
    if cfg.tool_tags.is_empty() || cfg.intent_matchers.is_empty() {
        let evidence = EvidenceRecord {
            defect: DefectClass::WeakTool,
            features,
            score: 0.0,
            supporting_spans: Vec::new(),
        };
        return RawFinding::from_evidence(
            evidence,
            threshold,
            Some("inapplicable: no capability tags or intent matchers configured".into()),
        );
    }

    // Intent contexts: message events whose payload hits a matcher keyword.
    // Each context is answered by the next tool call, if any.
    let mut contexts: Vec<(usize, BTreeSet<&str>, Option<&str>)> = Vec::new();
    for ev in &t.events {
        if ev.event_type != EventType::Message {
            continue;
        }
        let lower = ev.payload.to_lowercase();
        let tags: BTreeSet<&str> = cfg
            .intent_matchers
            .iter()
            .filter(|(_, keywords)| keywords.iter().any(|k| lower.contains(&k.to_lowercase())))
            .map(|(tag, _)| tag.as_str())
            .collect();
        if tags.is_empty() {
            continue;
        }
        let responder = t.events[ev.index + 1..]
            .iter()
            .find(|e| e.event_type == EventType::ToolCall)
            .and_then(|e| e.tool.as_ref())
            .map(|tool| tool.tool_name.as_str());
        contexts.push((ev.index, tags, responder));
    }

    let mut score = 0.0f64;
    let mut spans = Vec::new();
    let mut best = (0usize, 0.0f64, 0.0f64);
    for (tool, tags) in &cfg.tool_tags {
        let appropriate: Vec<&(usize, BTreeSet<&str>, Option<&str>)> = contexts
            .iter()
            .filter(|(_, ctx_tags, _)| tags.iter().any(|g| ctx_tags.contains(g.as_str())))
            .collect();
        if appropriate.len() < cfg.min_weak_contexts {
            continue;
        }
        let n = appropriate.len() as f64;
        let own = appropriate
            .iter()
            .filter(|(_, _, r)| *r == Some(tool.as_str()))
            .count() as f64;
        let own_rate = own / n;
        if own_rate >= cfg.low_rate {
            continue;
        }
        let alt_coverage = cfg
            .tool_tags
            .iter()
            .filter(|(alt, alt_tags)| *alt != tool && !alt_tags.is_disjoint(tags))
            .map(|(alt, _)| {
                appropriate
                    .iter()
                    .filter(|(_, _, r)| *r == Some(alt.as_str()))
                    .count() as f64
                    / n
            })
            .fold(0.0f64, f64::max);
        if alt_coverage <= cfg.alt_rate {
            continue;
        }
        let candidate = clamp01(alt_coverage - own_rate);
        if candidate > score {
            score = candidate;
            spans = appropriate.iter().map(|(i, ..)| (*i, *i)).collect();
            best = (appropriate.len(), own_rate, alt_coverage);
        }
    }

    features.insert("appropriate_contexts".into(), best.0 as f64);
    features.insert("own_rate".into(), best.1);
    features.insert("alt_coverage".into(), best.2);
    let evidence = EvidenceRecord {
        defect: DefectClass::WeakTool,
        features,
        score,
        supporting_spans: spans,
    };
    RawFinding::from_evidence(evidence, threshold, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{Outcome, Source, TrajectoryBuilder};

    #[test]
    fn single_tool_scores_zero() {
        let mut b = TrajectoryBuilder::new("i", Source::Other, Outcome::Success, 4000);
        b.tool_call("file_search", &[("query", "init")]);
        b.tool_result("found", ValidationStatus::Pass);
        let f = detect_inconsistent_tool_interface(&b.build(), &DetectorConfig::default());
        assert_eq!(f.evidence.score, 0.0);
    }

    #[test]
    fn divergent_cluster_scores_three_quarters() {
        let mut b = TrajectoryBuilder::new("i", Source::Other, Outcome::Success, 8000);
        b.tool_call("item_search", &[("query", "alpha beta")]);
        b.tool_result(r#"{"hits": 3}"#, ValidationStatus::Pass);
        b.tool_call("item_search_v2", &[("q", "7")]);
        b.tool_result("plain text result", ValidationStatus::Pass);
        let f = detect_inconsistent_tool_interface(&b.build(), &DetectorConfig::default());
        // param names, param types, and output structure disagree; neither
        // tool surfaced an error shape, so that facet compares equal.
        assert!((f.evidence.score - 0.75).abs() < 1e-9, "score {}", f.evidence.score);
        assert!(f.triggered);
    }

    #[test]
    fn identical_interfaces_score_zero() {
        let mut b = TrajectoryBuilder::new("i", Source::Other, Outcome::Success, 8000);
        b.tool_call("repo_search", &[("query", "alpha")]);
        b.tool_result(r#"{"hits": 1}"#, ValidationStatus::Pass);
        b.tool_call("repo_search_fast", &[("query", "beta")]);
        b.tool_result(r#"{"hits": 9}"#, ValidationStatus::Pass);
        let f = detect_inconsistent_tool_interface(&b.build(), &DetectorConfig::default());
        assert_eq!(f.evidence.score, 0.0);
        assert!(!f.triggered);
    }

    fn weak_cfg() -> DetectorConfig {
        let mut cfg = DetectorConfig::default();
        cfg.tool_tags.insert(
            "precise_lookup".into(),
            ["lookup"].iter().map(|s| s.to_string()).collect(),
        );
        cfg.tool_tags.insert(
            "grep_all".into(),
            ["lookup"].iter().map(|s| s.to_string()).collect(),
        );
        cfg.intent_matchers
            .insert("lookup".into(), vec!["need to look up".into()]);
        cfg
    }

    fn weak_fixture(own_hits: usize, alt_hits: usize, total: usize) -> Trajectory {
        let mut b = TrajectoryBuilder::new("w", Source::Other, Outcome::Success, 40_000);
        for i in 0..total {
            b.message(&format!("need to look up symbol {i}"));
            let tool = if i < own_hits {
                "precise_lookup"
            } else if i < own_hits + alt_hits {
                "grep_all"
            } else {
                "unrelated_tool"
            };
            b.tool_call(tool, &[("target", &format!("symbol {i}"))]);
            b.tool_result("ok", ValidationStatus::Pass);
        }
        b.build()
    }

    #[test]
    fn unused_tool_with_dominant_alternative_scores_point_nine() {
        let f = detect_weak_tool(&weak_fixture(0, 18, 20), &weak_cfg());
        assert!((f.evidence.score - 0.9).abs() < 1e-9, "score {}", f.evidence.score);
        assert!(f.triggered);
    }

    #[test]
    fn balanced_usage_scores_zero() {
        let f = detect_weak_tool(&weak_fixture(10, 10, 20), &weak_cfg());
        assert_eq!(f.evidence.score, 0.0);
        assert!(!f.triggered);
    }

    #[test]
    fn no_tags_is_inapplicable() {
        let f = detect_weak_tool(&weak_fixture(0, 18, 20), &DetectorConfig::default());
        assert_eq!(f.evidence.score, 0.0);
        assert!(f.exempted);
        assert!(f.exempt_rationale.as_deref().unwrap_or("").contains("inapplicable"));
    }

    #[test]
    fn too_few_contexts_is_ignored() {
        let f = detect_weak_tool(&weak_fixture(0, 3, 3), &weak_cfg());
        assert_eq!(f.evidence.score, 0.0);
    }
}
