//! `analyze`: detect, calibrate, and score trajectories into scorecards
//! plus a run summary.

use super::{io_err, read_trajectory, report_item, CliError};
use crate::config::RunConfig;
use crate::output::{to_json_bytes, write_atomic, SUMMARY_SCHEMA};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use trajlens_core::calibration::{
    calibrate_findings, CalibrationContext, CalibrationMethod, CalibrationModel,
};
use trajlens_core::detectors::{detect_all, DefectClass};
use trajlens_core::scoring::{build_scorecard, scenario_scores, Scorecard, ScenarioTable};

#[derive(Serialize)]
struct RunSummary {
    schema: &'static str,
    method: CalibrationMethod,
    eta: f64,
    scorecards: usize,
    failures: usize,
    table: ScenarioTable,
}

pub fn run(
    trajectories: &[PathBuf],
    cfg: &RunConfig,
    model_path: Option<&Path>,
    out_dir: &Path,
    strict: bool,
) -> Result<usize, CliError> {
    let models: BTreeMap<DefectClass, CalibrationModel> = match model_path {
        Some(path) => {
            let file = super::load_models(path)?;
            if file.method != cfg.method {
                return Err(super::bad_input(
                    path,
                    format!(
                        "model file was fit with {}, config asks for {}",
                        file.method.as_str(),
                        cfg.method.as_str()
                    ),
                ));
            }
            file.models
        }
        // Without a model the hard-threshold baseline applies: triggered
        // findings carry risk 1, everything else 0.
        None if cfg.method == CalibrationMethod::HardThreshold => BTreeMap::new(),
        None => {
            return Err(CliError::Failed(format!(
                "method {} requires --model (only hard_threshold runs without one)",
                cfg.method.as_str()
            )))
        }
    };

    let mut failures = 0usize;
    let mut cards: Vec<Scorecard> = Vec::new();
    for path in trajectories {
        let card = read_trajectory(path).and_then(|t| {
            let findings = detect_all(&t, &cfg.detector);
            let ctx = CalibrationContext::of(&t, &cfg.calibration);
            let calibrated = calibrate_findings(&findings, &models, &ctx, &cfg.calibration)
                .map_err(|e| super::bad_input(path, e))?;
            build_scorecard(&t, &calibrated, cfg.scoring.eta, &cfg.scoring)
                .map_err(|e| super::bad_input(path, e))
        });
        match card {
            Ok(card) => {
                let out = out_dir.join(format!("{}.scorecard.json", card.trajectory_id));
                write_atomic(&out, &to_json_bytes(&card)).map_err(io_err(&out))?;
                cards.push(card);
            }
            Err(e) => report_item(strict, &mut failures, path, e)?,
        }
    }

    cards.sort_by(|a, b| a.trajectory_id.cmp(&b.trajectory_id));
    let summary = RunSummary {
        schema: SUMMARY_SCHEMA,
        method: cfg.method,
        eta: cfg.scoring.eta,
        scorecards: cards.len(),
        failures,
        table: scenario_scores(&cards),
    };
    let out = out_dir.join("run_summary.json");
    write_atomic(&out, &to_json_bytes(&summary)).map_err(io_err(&out))?;
    Ok(failures)
}
