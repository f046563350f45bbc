//! `calibrate`: fit per-defect calibration models on the calibration split.

use super::{bad_input, io_err, load_annotations, read_trajectory, CliError, ModelFile};
use crate::config::RunConfig;
use crate::output::{to_json_bytes, write_atomic, MODEL_FILE_SCHEMA, SPLIT_SCHEMA};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use trajlens_core::calibration::{fit_calibrator, CalibrationContext, FitOptions};
use trajlens_core::detectors::{detect_all, DefectClass, Dimension, EvidenceRecord};
use trajlens_core::evaluation::Label;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitFile {
    pub schema: String,
    pub dev: Vec<String>,
    pub cal: Vec<String>,
    pub eval: Vec<String>,
}

pub fn load_split(path: &Path) -> Result<SplitFile, CliError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let split: SplitFile = serde_json::from_slice(&bytes).map_err(|e| bad_input(path, e))?;
    if split.schema != SPLIT_SCHEMA {
        return Err(bad_input(
            path,
            format!("unsupported split schema {}", split.schema),
        ));
    }
    Ok(split)
}

pub fn run(
    trajectories: &[PathBuf],
    annotations_path: &Path,
    split_path: &Path,
    cfg: &RunConfig,
    out_path: &Path,
) -> Result<usize, CliError> {
    let split = load_split(split_path)?;
    let cal: BTreeSet<&str> = split.cal.iter().map(String::as_str).collect();
    let eval: BTreeSet<&str> = split.eval.iter().map(String::as_str).collect();
    let annotations = load_annotations(annotations_path)?;
    let labels: BTreeMap<&str, &BTreeMap<DefectClass, Label>> = annotations
        .iter()
        .map(|a| (a.trajectory_id.as_str(), &a.labels))
        .collect();

    // (evidence, context, label) rows per defect class, calibration split only.
    let mut data: BTreeMap<DefectClass, Vec<(EvidenceRecord, CalibrationContext, f64)>> =
        BTreeMap::new();
    for path in trajectories {
        let t = read_trajectory(path)?;
        let id = t.trajectory_id.as_str();
        if eval.contains(id) {
            return Err(CliError::SplitLeakage(format!(
                "{id} belongs to the evaluation split and must not be used for fitting"
            )));
        }
        if !cal.contains(id) {
            return Err(CliError::Failed(format!(
                "{id} is not in the calibration split"
            )));
        }
        let Some(case_labels) = labels.get(id) else {
            return Err(bad_input(
                annotations_path,
                format!("no annotation for {id}"),
            ));
        };
        let ctx = CalibrationContext::of(&t, &cfg.calibration);
        for f in detect_all(&t, &cfg.detector) {
            let defect = f.evidence.defect;
            // Exempt labels carry no risk information; exemption is applied
            // before risk estimation.
            match case_labels.get(&defect) {
                Some(Label::Present) => {
                    data.entry(defect).or_default().push((f.evidence, ctx, 1.0))
                }
                Some(Label::Absent) => {
                    data.entry(defect).or_default().push((f.evidence, ctx, 0.0))
                }
                Some(Label::Exempt) | None => {}
            }
        }
    }

    // Family prior: pooled positive rate over the defect's dimension.
    let mut dim_prior: BTreeMap<Dimension, f64> = BTreeMap::new();
    for dim in Dimension::ALL {
        let rows: Vec<f64> = dim
            .classes()
            .iter()
            .filter_map(|c| data.get(c))
            .flatten()
            .map(|(_, _, y)| *y)
            .collect();
        if !rows.is_empty() {
            dim_prior.insert(dim, rows.iter().sum::<f64>() / rows.len() as f64);
        }
    }

    let mut models = BTreeMap::new();
    for (defect, rows) in &data {
        let opts = FitOptions {
            threshold: cfg.detector.threshold(*defect),
            shrinkage_m: cfg.calibration.shrinkage_m,
            score_buckets: cfg.calibration.score_buckets,
            family_prior: dim_prior.get(&defect.dimension()).copied(),
        };
        let model = fit_calibrator(rows, *defect, cfg.method, &opts)
            .map_err(|e| CliError::Failed(format!("fitting {defect:?}: {e}")))?;
        models.insert(*defect, model);
    }
    if models.is_empty() {
        return Err(CliError::Failed(
            "no labeled findings on the calibration split".into(),
        ));
    }

    let file = ModelFile {
        schema: MODEL_FILE_SCHEMA.to_string(),
        method: cfg.method,
        models,
    };
    write_atomic(out_path, &to_json_bytes(&file)).map_err(io_err(out_path))?;
    Ok(0)
}
