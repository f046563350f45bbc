//! Detector configuration with documented defaults. Thresholds start at 0.5
//! for every class and are meant to be refined on a development split.

use super::DefectClass;
use crate::trajectory::Source;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Per-class activation thresholds; classes not listed use 0.5.
    pub thresholds: BTreeMap<DefectClass, f64>,

    // Ghost context: normalization caps for segment stats.
    pub ghost_occupancy_cap: f64,
    /// Persistence is normalized against this fraction of the trajectory.
    pub ghost_persistence_frac: f64,
    pub ghost_reference_cap: f64,

    // Oversized rules.
    pub rules_base: f64,
    pub rules_span: f64,

    // Context-window thrashing.
    pub saturation: f64,
    pub drop: f64,
    pub delta: usize,
    pub cycle_cap: usize,

    // Duplicate step.
    pub dup_window: usize,
    pub dup_similarity: f64,
    pub time_varying_tools: BTreeSet<String>,
    pub batch_units: BTreeSet<String>,

    // Tool call chain.
    pub max_period: usize,
    pub min_reps: usize,

    // Long chain.
    pub length_baselines: BTreeMap<Source, usize>,
    pub default_length_baseline: usize,
    pub consolidation_unit: usize,

    // Wrapper workflow.
    pub min_invocations: usize,

    // Context coupling.
    pub bidirectional_cap: f64,
    pub alternation_cap: f64,
    /// Reversal chains shorter than this do not count as alternation.
    pub min_alternation: usize,
    pub scc_cap: f64,
    pub coupling_weights: [f64; 3],
    pub scc_force_size: usize,

    // Inconsistent tool interface.
    pub cluster_sim: f64,

    // Weak tool. Capability tags and intent matchers must be supplied; the
    // detector reports "inapplicable" without them.
    pub low_rate: f64,
    pub alt_rate: f64,
    pub min_weak_contexts: usize,
    /// tool name -> capability tags.
    pub tool_tags: BTreeMap<String, BTreeSet<String>>,
    /// capability tag -> payload keywords marking an appropriate context.
    pub intent_matchers: BTreeMap<String, Vec<String>>,

    // Dependency graph.
    pub data_flow_overlap: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            thresholds: BTreeMap::new(),
            ghost_occupancy_cap: 0.25,
            ghost_persistence_frac: 0.5,
            ghost_reference_cap: 0.2,
            rules_base: 0.25,
            rules_span: 0.50,
            saturation: 0.90,
            drop: 0.30,
            delta: 3,
            cycle_cap: 5,
            dup_window: 20,
            dup_similarity: 0.9,
            time_varying_tools: BTreeSet::new(),
            batch_units: BTreeSet::new(),
            max_period: 4,
            min_reps: 3,
            length_baselines: BTreeMap::new(),
            default_length_baseline: 100,
            consolidation_unit: 25,
            min_invocations: 3,
            bidirectional_cap: 3.0,
            alternation_cap: 6.0,
            min_alternation: 4,
            scc_cap: 4.0,
            coupling_weights: [0.3, 0.3, 0.4],
            scc_force_size: 3,
            cluster_sim: 0.5,
            low_rate: 0.05,
            alt_rate: 0.80,
            min_weak_contexts: 5,
            tool_tags: BTreeMap::new(),
            intent_matchers: BTreeMap::new(),
            data_flow_overlap: 0.6,
        }
    }
}

impl DetectorConfig {
    pub fn threshold(&self, class: DefectClass) -> f64 {
        self.thresholds.get(&class).copied().unwrap_or(0.5)
    }

    pub fn length_baseline(&self, source: Source) -> usize {
        self.length_baselines
            .get(&source)
            .copied()
            .unwrap_or(self.default_length_baseline)
    }

    pub fn graph_config(&self) -> crate::trajectory::GraphConfig {
        crate::trajectory::GraphConfig {
            data_flow_overlap: self.data_flow_overlap,
        }
    }
}
