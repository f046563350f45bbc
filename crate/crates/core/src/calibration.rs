//! Posterior risk calibration: maps raw evidence scores to defect risks
//! under a conditioning context, bands them into severities, and measures
//! calibration quality.

use crate::detectors::{DefectClass, EvidenceRecord, RawFinding};
use crate::trajectory::{Source, Trajectory};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const CALIBRATION_MODEL_SCHEMA: &str = "trajlens.calibration.v1";

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("no training data")]
    EmptyData,
    #[error("label {0} outside {{0, 1}}")]
    BadLabel(f64),
    #[error("model fitted for {expected:?}, applied to {got:?}")]
    DefectMismatch {
        expected: DefectClass,
        got: DefectClass,
    },
    #[error("bin count must be at least 1")]
    BadBins,
    #[error("severity bands require warning < error, got {warning} >= {error}")]
    BadBands { warning: f64, error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonBucket {
    Short,
    Medium,
    Long,
}

impl HorizonBucket {
    pub fn as_str(&self) -> &'static str {
        match self {
            HorizonBucket::Short => "short",
            HorizonBucket::Medium => "medium",
            HorizonBucket::Long => "long",
        }
    }
}

/// Conditioning variables for risk estimation, derived from the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationContext {
    pub source: Source,
    pub horizon: HorizonBucket,
}

impl CalibrationContext {
    pub fn of(t: &Trajectory, cfg: &CalibrationConfig) -> Self {
        let n = t.events.len();
        let horizon = if n < cfg.horizon_cuts.0 {
            HorizonBucket::Short
        } else if n < cfg.horizon_cuts.1 {
            HorizonBucket::Medium
        } else {
            HorizonBucket::Long
        };
        Self {
            source: t.source,
            horizon,
        }
    }

    pub fn key(&self) -> String {
        format!("{}/{}", self.source.as_str(), self.horizon.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    /// Event-count cut points separating short/medium/long horizons.
    pub horizon_cuts: (usize, usize),
    pub score_buckets: usize,
    pub shrinkage_m: f64,
    pub delta_warning: f64,
    pub delta_error: f64,
    pub ece_bins: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            horizon_cuts: (50, 200),
            score_buckets: 5,
            shrinkage_m: 10.0,
            delta_warning: 0.4,
            delta_error: 0.8,
            ece_bins: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMethod {
    HardThreshold,
    BetaSmoothed,
    MonotoneMap,
}

impl CalibrationMethod {
    pub const ALL: [CalibrationMethod; 3] = [
        CalibrationMethod::HardThreshold,
        CalibrationMethod::BetaSmoothed,
        CalibrationMethod::MonotoneMap,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CalibrationMethod::HardThreshold => "hard_threshold",
            CalibrationMethod::BetaSmoothed => "beta_smoothed",
            CalibrationMethod::MonotoneMap => "monotone_map",
        }
    }
}

/// Trigger/label counts for one score bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct BucketCounts {
    pub positives: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub schema: String,
    pub defect: DefectClass,
    pub method: CalibrationMethod,
    /// Activation threshold, used by the hard baseline.
    pub threshold: f64,
    /// Pooled positive frequency at the defect-family level.
    pub family_prior: f64,
    pub shrinkage_m: f64,
    pub score_buckets: usize,
    /// Context key -> per-bucket counts (beta_smoothed only).
    pub buckets: BTreeMap<String, Vec<BucketCounts>>,
    /// Non-decreasing step function (score, fitted value), sorted by score
    /// (monotone_map only).
    pub steps: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub threshold: f64,
    pub shrinkage_m: f64,
    pub score_buckets: usize,
    /// Pooled trigger frequency of the defect's dimension. When absent the
    /// prior falls back to the mean label of the training data.
    pub family_prior: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            shrinkage_m: 10.0,
            score_buckets: 5,
            family_prior: None,
        }
    }
}

fn bucket_index(score: f64, buckets: usize) -> usize {
    ((score * buckets as f64) as usize).min(buckets - 1)
}

/// Pool-adjacent-violators isotonic regression over (score, label) pairs.
/// Ties on score are pooled first so the result is a function of score.
fn isotonic_steps(mut points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut grouped: Vec<(f64, f64, f64)> = Vec::new(); // (score, mean, weight)
    for (score, y) in points {
        match grouped.last_mut() {
            Some((s, mean, w)) if *s == score => {
                *mean = (*mean * *w + y) / (*w + 1.0);
                *w += 1.0;
            }
            _ => grouped.push((score, y, 1.0)),
        }
    }
    // Blocks carry (start score, fitted value, weight); merge violations.
    let mut blocks: Vec<(f64, f64, f64)> = Vec::new();
    for (score, mean, weight) in grouped {
        blocks.push((score, mean, weight));
        while blocks.len() >= 2 {
            let (_, v_hi, w_hi) = blocks[blocks.len() - 1];
            let (_, v_lo, w_lo) = blocks[blocks.len() - 2];
            if v_lo <= v_hi {
                break;
            }
            let merged = (v_lo * w_lo + v_hi * w_hi) / (w_lo + w_hi);
            blocks.pop();
            let last = blocks.last_mut().expect("block exists");
            last.1 = merged;
            last.2 = w_lo + w_hi;
        }
    }
    blocks.into_iter().map(|(s, v, _)| (s, v)).collect()
}

pub fn fit_calibrator(
    data: &[(EvidenceRecord, CalibrationContext, f64)],
    defect: DefectClass,
    method: CalibrationMethod,
    opts: &FitOptions,
) -> Result<CalibrationModel, CalibrationError> {
    if data.is_empty() {
        return Err(CalibrationError::EmptyData);
    }
    for (_, _, y) in data {
        if *y != 0.0 && *y != 1.0 {
            return Err(CalibrationError::BadLabel(*y));
        }
    }
    let family_prior = opts
        .family_prior
        .unwrap_or_else(|| data.iter().map(|(_, _, y)| y).sum::<f64>() / data.len() as f64);

    let mut model = CalibrationModel {
        schema: CALIBRATION_MODEL_SCHEMA.to_string(),
        defect,
        method,
        threshold: opts.threshold,
        family_prior,
        shrinkage_m: opts.shrinkage_m,
        score_buckets: opts.score_buckets.max(1),
        buckets: BTreeMap::new(),
        steps: Vec::new(),
    };
    match method {
        CalibrationMethod::HardThreshold => {}
        CalibrationMethod::BetaSmoothed => {
            for (evidence, ctx, y) in data {
                let row = model
                    .buckets
                    .entry(ctx.key())
                    .or_insert_with(|| vec![BucketCounts::default(); model.score_buckets]);
                let b = bucket_index(evidence.score, model.score_buckets);
                row[b].positives += y;
                row[b].total += 1.0;
            }
        }
        CalibrationMethod::MonotoneMap => {
            let points = data
                .iter()
                .map(|(evidence, _, y)| (evidence.score, *y))
                .collect();
            model.steps = isotonic_steps(points);
        }
    }
    Ok(model)
}

pub fn apply_calibrator(
    model: &CalibrationModel,
    evidence: &EvidenceRecord,
    ctx: &CalibrationContext,
) -> Result<f64, CalibrationError> {
    if model.defect != evidence.defect {
        return Err(CalibrationError::DefectMismatch {
            expected: model.defect,
            got: evidence.defect,
        });
    }
    let score = evidence.score;
    let p = match model.method {
        CalibrationMethod::HardThreshold => {
            if score >= model.threshold {
                1.0
            } else {
                0.0
            }
        }
        CalibrationMethod::BetaSmoothed => {
            let counts = model
                .buckets
                .get(&ctx.key())
                .map(|row| row[bucket_index(score, model.score_buckets)])
                .unwrap_or_default();
            let (k, n) = (counts.positives, counts.total);
            // Laplace estimate shrunk toward the family prior by n/(n+m).
            let laplace = (k + 1.0) / (n + 2.0);
            let weight = n / (n + model.shrinkage_m);
            weight * laplace + (1.0 - weight) * model.family_prior
        }
        CalibrationMethod::MonotoneMap => match model.steps.first() {
            None => model.family_prior,
            Some(&(_, lowest)) => model
                .steps
                .iter()
                .take_while(|(s, _)| *s <= score)
                .last()
                .map(|&(_, v)| v)
                .unwrap_or(lowest),
        },
    };
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    None,
    Warning,
    Error,
}

pub fn band_severity(p: f64, delta_w: f64, delta_e: f64) -> Result<Severity, CalibrationError> {
    if delta_w >= delta_e {
        return Err(CalibrationError::BadBands {
            warning: delta_w,
            error: delta_e,
        });
    }
    Ok(if p >= delta_e {
        Severity::Error
    } else if p >= delta_w {
        Severity::Warning
    } else {
        Severity::None
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedFinding {
    pub raw: RawFinding,
    pub posterior_risk: f64,
    pub severity: Severity,
}

/// Calibrate one trajectory's findings. Exempted findings carry zero risk:
/// exemptions apply after score computation and before risk estimation.
pub fn calibrate_findings(
    findings: &[RawFinding],
    models: &BTreeMap<DefectClass, CalibrationModel>,
    ctx: &CalibrationContext,
    cfg: &CalibrationConfig,
) -> Result<Vec<CalibratedFinding>, CalibrationError> {
    findings
        .iter()
        .map(|f| {
            let risk = if f.exempted {
                0.0
            } else {
                match models.get(&f.evidence.defect) {
                    Some(model) => apply_calibrator(model, &f.evidence, ctx)?,
                    None => {
                        if f.triggered {
                            1.0
                        } else {
                            0.0
                        }
                    }
                }
            };
            Ok(CalibratedFinding {
                raw: f.clone(),
                posterior_risk: risk,
                severity: band_severity(risk, cfg.delta_warning, cfg.delta_error)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub mean_predicted: f64,
    pub empirical_frequency: f64,
    pub count: usize,
}

pub fn reliability_bins(
    pairs: &[(f64, f64)],
    bins: usize,
) -> Result<Vec<ReliabilityBin>, CalibrationError> {
    if bins < 1 {
        return Err(CalibrationError::BadBins);
    }
    if pairs.is_empty() {
        return Err(CalibrationError::EmptyData);
    }
    let mut sums = vec![(0.0f64, 0.0f64, 0usize); bins];
    for &(p, y) in pairs {
        let b = bucket_index(p.clamp(0.0, 1.0), bins);
        sums[b].0 += p;
        sums[b].1 += y;
        sums[b].2 += 1;
    }
    Ok(sums
        .into_iter()
        .map(|(p_sum, y_sum, n)| ReliabilityBin {
            mean_predicted: if n > 0 { p_sum / n as f64 } else { 0.0 },
            empirical_frequency: if n > 0 { y_sum / n as f64 } else { 0.0 },
            count: n,
        })
        .collect())
}

/// Expected calibration error over equal-width bins; empty bins contribute 0.
pub fn compute_ece(pairs: &[(f64, f64)], bins: usize) -> Result<f64, CalibrationError> {
    let table = reliability_bins(pairs, bins)?;
    let total = pairs.len() as f64;
    Ok(table
        .iter()
        .map(|b| {
            (b.count as f64 / total) * (b.mean_predicted - b.empirical_frequency).abs()
        })
        .sum())
}
