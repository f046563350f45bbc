//! `evaluate`: turn scorecards and annotations into analysis tables.
//!
//! Analyses: metrics, ece, reliability, kappa, correlation, bootstrap,
//! eta_sweep, rank_shift. Systems are identified by trajectory source;
//! strata by "{source}/{outcome}".

use super::{bad_input, load_annotations, CliError};
use crate::config::RunConfig;
use crate::output::write_table;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use trajlens_core::calibration::{compute_ece, reliability_bins, ReliabilityBin};
use trajlens_core::detectors::DefectClass;
use trajlens_core::evaluation::{
    bootstrap_ranking, cohen_kappa, defect_correlation_matrix, defect_failure_correlation,
    detection_metrics, eta_sweep, rank_shift, AnnotationRecord, Label, MetricBundle,
};
use trajlens_core::scoring::Scorecard;
use trajlens_core::trajectory::Outcome;

pub const ANALYSES: [&str; 8] = [
    "metrics",
    "ece",
    "reliability",
    "kappa",
    "correlation",
    "bootstrap",
    "eta_sweep",
    "rank_shift",
];

fn load_scorecards(paths: &[PathBuf]) -> Result<Vec<Scorecard>, CliError> {
    let mut cards = Vec::new();
    for path in paths {
        let bytes = std::fs::read(path).map_err(super::io_err(path))?;
        let card: Scorecard = serde_json::from_slice(&bytes).map_err(|e| bad_input(path, e))?;
        cards.push(card);
    }
    cards.sort_by(|a, b| a.trajectory_id.cmp(&b.trajectory_id));
    Ok(cards)
}

fn missing(analysis: &str, what: &str) -> CliError {
    CliError::MissingInput {
        analysis: analysis.to_string(),
        missing: what.to_string(),
    }
}

/// (evidence score, triggered, posterior risk, label) rows per defect, for
/// scorecards with a matching annotation.
fn aligned_rows(
    cards: &[Scorecard],
    annotations: &[AnnotationRecord],
    analysis: &str,
) -> Result<BTreeMap<DefectClass, Vec<(f64, bool, f64, Label)>>, CliError> {
    let by_id: BTreeMap<&str, &AnnotationRecord> = annotations
        .iter()
        .map(|a| (a.trajectory_id.as_str(), a))
        .collect();
    let mut rows: BTreeMap<DefectClass, Vec<(f64, bool, f64, Label)>> = BTreeMap::new();
    let mut matched = 0usize;
    for card in cards {
        let Some(ann) = by_id.get(card.trajectory_id.as_str()) else {
            continue;
        };
        matched += 1;
        for f in &card.findings {
            let defect = f.raw.evidence.defect;
            if let Some(label) = ann.labels.get(&defect) {
                rows.entry(defect).or_default().push((
                    f.raw.evidence.score,
                    f.raw.triggered,
                    f.posterior_risk,
                    *label,
                ));
            }
        }
    }
    if matched == 0 {
        return Err(missing(analysis, "scorecards with matching annotations"));
    }
    Ok(rows)
}

#[derive(Serialize)]
struct EceRow {
    count: usize,
    ece: Option<f64>,
}

#[derive(Serialize)]
struct KappaBody {
    annotators: (String, String),
    cases: usize,
    kappa_by_defect: BTreeMap<DefectClass, Option<f64>>,
    pooled: Option<f64>,
}

pub struct EvaluateInputs<'a> {
    pub scorecards: &'a [PathBuf],
    pub annotations: Option<&'a Path>,
    pub analyses: &'a [String],
    pub out_dir: &'a Path,
}

pub fn run(inputs: &EvaluateInputs, cfg: &RunConfig) -> Result<usize, CliError> {
    for a in inputs.analyses {
        if !ANALYSES.contains(&a.as_str()) {
            return Err(CliError::Failed(format!(
                "unknown analysis {a}; available: {}",
                ANALYSES.join(", ")
            )));
        }
    }
    let cards = load_scorecards(inputs.scorecards)?;
    if cards.is_empty() {
        return Err(CliError::Failed("no scorecards given".into()));
    }
    let annotations = inputs
        .annotations
        .map(load_annotations)
        .transpose()?
        .unwrap_or_default();
    let out = inputs.out_dir;

    for analysis in inputs.analyses {
        match analysis.as_str() {
            "metrics" => {
                if annotations.is_empty() {
                    return Err(missing("metrics", "--annotations"));
                }
                let rows = aligned_rows(&cards, &annotations, "metrics")?;
                let mut body: BTreeMap<DefectClass, MetricBundle> = BTreeMap::new();
                for (defect, rs) in rows {
                    let preds: Vec<(f64, bool)> =
                        rs.iter().map(|(s, t, _, _)| (*s, *t)).collect();
                    let labels: Vec<Label> = rs.iter().map(|(_, _, _, l)| *l).collect();
                    let bundle = detection_metrics(&preds, &labels)
                        .map_err(|e| CliError::Failed(format!("metrics for {defect:?}: {e}")))?;
                    body.insert(defect, bundle);
                }
                write_table(out, "metrics", body).map_err(super::io_err(out))?;
            }
            "ece" | "reliability" => {
                if annotations.is_empty() {
                    return Err(missing(analysis, "--annotations"));
                }
                let rows = aligned_rows(&cards, &annotations, analysis)?;
                // Risk/label pairs pooled over defects, exempt cases dropped.
                let pairs: Vec<(f64, f64)> = rows
                    .values()
                    .flatten()
                    .filter(|(_, _, _, l)| *l != Label::Exempt)
                    .map(|(_, _, risk, l)| {
                        (*risk, if *l == Label::Present { 1.0 } else { 0.0 })
                    })
                    .collect();
                if analysis == "ece" {
                    let ece = if pairs.is_empty() {
                        None
                    } else {
                        Some(
                            compute_ece(&pairs, cfg.calibration.ece_bins)
                                .map_err(|e| CliError::Failed(e.to_string()))?,
                        )
                    };
                    let body = EceRow {
                        count: pairs.len(),
                        ece,
                    };
                    write_table(out, "ece", body).map_err(super::io_err(out))?;
                } else {
                    let bins: Vec<ReliabilityBin> =
                        reliability_bins(&pairs, cfg.calibration.ece_bins)
                            .map_err(|e| CliError::Failed(e.to_string()))?;
                    write_table(out, "reliability", bins).map_err(super::io_err(out))?;
                }
            }
            "kappa" => {
                let mut annotators: BTreeMap<&str, BTreeMap<&str, &AnnotationRecord>> =
                    BTreeMap::new();
                for a in &annotations {
                    annotators
                        .entry(a.annotator_id.as_str())
                        .or_default()
                        .insert(a.trajectory_id.as_str(), a);
                }
                if annotators.len() < 2 {
                    return Err(missing(
                        "kappa",
                        "annotations from at least two annotators",
                    ));
                }
                let mut it = annotators.iter();
                let (name_a, by_a) = it.next().expect("two annotators");
                let (name_b, by_b) = it.next().expect("two annotators");
                let shared: Vec<&str> = by_a
                    .keys()
                    .filter(|id| by_b.contains_key(**id))
                    .copied()
                    .collect();
                if shared.is_empty() {
                    return Err(missing("kappa", "cases labeled by both annotators"));
                }
                let mut kappa_by_defect = BTreeMap::new();
                let mut pooled_a = Vec::new();
                let mut pooled_b = Vec::new();
                for defect in DefectClass::ALL {
                    let mut la = Vec::new();
                    let mut lb = Vec::new();
                    for id in &shared {
                        if let (Some(x), Some(y)) =
                            (by_a[id].labels.get(&defect), by_b[id].labels.get(&defect))
                        {
                            la.push(*x);
                            lb.push(*y);
                        }
                    }
                    pooled_a.extend(la.iter().copied());
                    pooled_b.extend(lb.iter().copied());
                    let k = if la.is_empty() {
                        None
                    } else {
                        cohen_kappa(&la, &lb, true)
                            .map_err(|e| CliError::Failed(e.to_string()))?
                    };
                    kappa_by_defect.insert(defect, k);
                }
                let pooled = cohen_kappa(&pooled_a, &pooled_b, true)
                    .map_err(|e| CliError::Failed(e.to_string()))?;
                let body = KappaBody {
                    annotators: (name_a.to_string(), name_b.to_string()),
                    cases: shared.len(),
                    kappa_by_defect,
                    pooled,
                };
                write_table(out, "kappa", body).map_err(super::io_err(out))?;
            }
            "correlation" => {
                let risk_maps: Vec<BTreeMap<DefectClass, f64>> = cards
                    .iter()
                    .map(|c| {
                        c.findings
                            .iter()
                            .map(|f| (f.raw.evidence.defect, f.posterior_risk))
                            .collect()
                    })
                    .collect();
                let outcomes: Vec<Outcome> = cards.iter().map(|c| c.outcome).collect();
                let failure = defect_failure_correlation(&risk_maps, &outcomes)
                    .map_err(|e| CliError::Failed(e.to_string()))?;
                let rows: Vec<Vec<f64>> = risk_maps
                    .iter()
                    .map(|m| {
                        DefectClass::ALL
                            .iter()
                            .map(|c| m.get(c).copied().unwrap_or(0.0))
                            .collect()
                    })
                    .collect();
                let matrix = defect_correlation_matrix(&rows)
                    .map_err(|e| CliError::Failed(e.to_string()))?;
                #[derive(Serialize)]
                struct CorrelationBody<M, X> {
                    failure_correlation: M,
                    defect_matrix: X,
                }
                let body = CorrelationBody {
                    failure_correlation: failure,
                    defect_matrix: matrix,
                };
                write_table(out, "correlation", body).map_err(super::io_err(out))?;
            }
            "bootstrap" => {
                // Per-system PB vectors must align case-for-case; the shared
                // case axis is the per-system scorecard order, so bootstrap
                // needs the same case count per system.
                let mut systems: BTreeMap<String, Vec<f64>> = BTreeMap::new();
                let mut strata_by_system: BTreeMap<String, Vec<String>> = BTreeMap::new();
                for c in &cards {
                    let system = c.source.as_str().to_string();
                    systems.entry(system.clone()).or_default().push(c.pb);
                    strata_by_system
                        .entry(system)
                        .or_default()
                        .push(format!("{}/{:?}", c.source.as_str(), c.outcome));
                }
                let n = systems.values().next().map(Vec::len).unwrap_or(0);
                if systems.values().any(|v| v.len() != n) {
                    return Err(missing(
                        "bootstrap",
                        "an equal number of scorecards per system",
                    ));
                }
                let strata = strata_by_system.into_values().next().expect("systems");
                let stats = bootstrap_ranking(&systems, 1000, &strata, cfg.seed)
                    .map_err(|e| CliError::Failed(e.to_string()))?;
                write_table(out, "bootstrap", stats).map_err(super::io_err(out))?;
            }
            "eta_sweep" => {
                let mut acc: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
                for c in &cards {
                    let e = acc.entry(c.source.as_str().to_string()).or_default();
                    e.0 += c.q_def;
                    e.1 += c.cp;
                    e.2 += 1;
                }
                let systems: BTreeMap<String, (f64, f64)> = acc
                    .into_iter()
                    .map(|(k, (q, cp, n))| (k, (q / n as f64, cp / n as f64)))
                    .collect();
                let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
                let sweep = eta_sweep(&systems, &grid)
                    .map_err(|e| CliError::Failed(e.to_string()))?;
                write_table(out, "eta_sweep", sweep).map_err(super::io_err(out))?;
            }
            "rank_shift" => {
                let mut pb: BTreeMap<String, (f64, usize)> = BTreeMap::new();
                let mut wins: BTreeMap<String, (f64, usize)> = BTreeMap::new();
                for c in &cards {
                    let key = c.source.as_str().to_string();
                    let p = pb.entry(key.clone()).or_default();
                    p.0 += c.pb;
                    p.1 += 1;
                    let w = wins.entry(key).or_default();
                    w.0 += if c.outcome == Outcome::Success { 1.0 } else { 0.0 };
                    w.1 += 1;
                }
                let mean = |m: BTreeMap<String, (f64, usize)>| -> BTreeMap<String, f64> {
                    m.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
                };
                let shifts = rank_shift(&mean(wins), &mean(pb))
                    .map_err(|e| CliError::Failed(e.to_string()))?;
                write_table(out, "rank_shift", shifts).map_err(super::io_err(out))?;
            }
            _ => unreachable!("validated above"),
        }
    }
    Ok(0)
}
