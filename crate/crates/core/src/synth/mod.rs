//! Synthetic trajectory generation with labeled defect injection. The
//! generator is the ground-truth oracle for detector and calibrator tests:
//! clean baselines stay below every activation threshold by construction,
//! and each injector plants one canonical defect pattern with known spans.

mod inject;

pub use inject::inject_defect;

use crate::detectors::{DefectClass, DetectorConfig};
use crate::evaluation::Label;
use crate::rng;
use crate::trajectory::{ExternalOpKind, Outcome, Source, Trajectory, TrajectoryBuilder, ValidationStatus};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible spec: {0}")]
    Infeasible(String),
    #[error("cannot inject {defect:?}: {reason}")]
    Uninjectable { defect: DefectClass, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitTopology {
    Flat,
    Tree,
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub defect: DefectClass,
    pub intensity: f64,
    #[serde(default)]
    pub location_hint: Option<usize>,
    /// Plant the exempt variant of the pattern instead (supported for
    /// ghost_context and duplicate_step).
    #[serde(default)]
    pub exempt_variant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    /// Inclusive range for the clean skeleton's event count. Injection can
    /// grow the trajectory beyond it.
    pub event_range: (usize, usize),
    pub tools: Vec<String>,
    pub topology: UnitTopology,
    pub unit_count: usize,
    pub capacity: u64,
    pub injections: Vec<Injection>,
    /// Intensities above this floor mark the defect present in ground truth.
    pub injection_floor: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            event_range: (40, 80),
            tools: default_palette(),
            topology: UnitTopology::Flat,
            unit_count: 3,
            capacity: 10_000,
            injections: Vec::new(),
            injection_floor: 0.0,
            seed: 0,
        }
    }
}

/// Pairwise-dissimilar names so the clean palette never clusters.
pub fn default_palette() -> Vec<String> {
    ["run_probe", "scan_grid", "emit_note", "calc_sum", "pack_box"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Detector configuration for synthetic corpora: defaults plus the weak-tool
/// capability convention the injector relies on.
pub fn detector_config() -> DetectorConfig {
    let mut cfg = DetectorConfig::default();
    cfg.tool_tags.insert(
        "precise_lookup".into(),
        std::iter::once("lookup".to_string()).collect(),
    );
    cfg.tool_tags.insert(
        "grep_all".into(),
        std::iter::once("lookup".to_string()).collect(),
    );
    cfg.intent_matchers
        .insert("lookup".into(), vec!["need_lookup".into()]);
    cfg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub labels: BTreeMap<DefectClass, Label>,
    pub spans: BTreeMap<DefectClass, Vec<(usize, usize)>>,
}

impl GroundTruth {
    fn all_absent() -> Self {
        GroundTruth {
            labels: DefectClass::ALL.iter().map(|c| (*c, Label::Absent)).collect(),
            spans: BTreeMap::new(),
        }
    }
}

fn validate_spec(spec: &SynthSpec) -> Result<(), SynthError> {
    if spec.event_range.0 < 3 || spec.event_range.0 > spec.event_range.1 {
        return Err(SynthError::Infeasible(format!(
            "event range {:?} must be ordered with a minimum of 3",
            spec.event_range
        )));
    }
    if spec.topology == UnitTopology::Cyclic && spec.unit_count < 2 {
        return Err(SynthError::Infeasible(
            "cyclic topology needs at least 2 units".into(),
        ));
    }
    if spec.tools.is_empty() {
        return Err(SynthError::Infeasible("empty tool palette".into()));
    }
    for inj in &spec.injections {
        if !(0.0..=1.0).contains(&inj.intensity) {
            return Err(SynthError::Infeasible(format!(
                "intensity {} outside [0, 1]",
                inj.intensity
            )));
        }
    }
    Ok(())
}

/// Deterministic generation: clean skeleton following the requested topology,
/// one injection pass per listed defect.
pub fn generate_trajectory(
    spec: &SynthSpec,
    seed: u64,
) -> Result<(Trajectory, GroundTruth), SynthError> {
    validate_spec(spec)?;
    let mut r = rng::substream(seed, "synth/skeleton");
    let n = r.gen_range(spec.event_range.0..=spec.event_range.1);
    let outcome = if r.gen_bool(0.7) {
        Outcome::Success
    } else {
        Outcome::Failure
    };

    let id = format!("synth-{seed:016x}");
    let mut b = TrajectoryBuilder::new(&id, Source::Synthetic, outcome, spec.capacity);
    b.message(&format!("objective scenario_{seed:x} begin"));

    // Each block is roughly four events; markers land every six blocks so
    // consolidation saturates on clean baselines.
    let blocks = (n / 4).max(2);
    // (worker entry event, delegating coordinator event) pairs to patch
    // with parent links after the build.
    let mut delegations: Vec<(usize, usize)> = Vec::new();
    let mut last_main = 0usize;
    for i in 0..blocks {
        let unit = match spec.topology {
            UnitTopology::Flat => None,
            UnitTopology::Tree => Some(format!("worker_{}", i % spec.unit_count.max(1))),
            UnitTopology::Cyclic => Some(format!("unit_{}", i % 2)),
        };
        b.set_unit(unit.as_deref());
        let entry = b.message(&format!("plan part_{i} goal_{i} of scenario"));
        if unit.is_some() {
            delegations.push((entry, last_main));
        }
        let tool = &spec.tools[i % spec.tools.len()];
        b.tool_call(tool, &[("step", &format!("item_{i} mark_{i}"))]);
        b.tool_result(&format!("res_{i} out_{i} fine_{i}"), ValidationStatus::Pass);
        match spec.topology {
            UnitTopology::Flat => {
                b.set_unit(None);
            }
            UnitTopology::Tree => {
                b.set_unit(Some("main"));
            }
            UnitTopology::Cyclic => {} // stay in the block's unit
        }
        last_main = b.message(&format!("saw res_{i} out_{i} fine_{i}"));
        if i % 6 == 5 {
            b.stage_marker(&format!("phase_{i} done"));
            last_main = b.external(ExternalOpKind::Checkpoint, &format!("state_{i}"));
        }
    }
    b.set_unit(None);
    b.stage_marker("wrap_up complete");

    let mut t = b.build();
    if spec.topology == UnitTopology::Tree {
        // Delegation parent links keep the unit graph a tree instead of
        // falling back to adjacency transitions.
        for &(entry, delegator) in &delegations {
            t.events[entry].dependency.parent_index = Some(delegator);
        }
    }
    if spec.topology == UnitTopology::Cyclic {
        for &(entry, _) in &delegations {
            if entry > 0 {
                t.events[entry].dependency.parent_index = Some(entry - 1);
            }
        }
    }

    let mut truth = GroundTruth::all_absent();
    for (k, inj) in spec.injections.iter().enumerate() {
        let inj_seed = rng::fnv1a(&format!("{seed}/{k}").into_bytes());
        let (next, spans) = inject_defect(&t, inj, inj_seed)?;
        t = next;
        if inj.intensity > spec.injection_floor {
            let label = if inj.exempt_variant {
                Label::Exempt
            } else {
                Label::Present
            };
            truth.labels.insert(inj.defect, label);
            truth.spans.entry(inj.defect).or_default().extend(spans);
        }
    }
    t.validate()
        .map_err(|e| SynthError::Infeasible(format!("generated invalid trajectory: {e}")))?;
    Ok((t, truth))
}
