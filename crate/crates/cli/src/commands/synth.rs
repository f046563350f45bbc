//! `synth`: generate labeled synthetic trajectories from a TOML spec.

use super::{bad_input, io_err, CliError};
use crate::output::{to_json_bytes, write_atomic, TRUTH_SCHEMA};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use trajlens_core::detectors::DefectClass;
use trajlens_core::evaluation::Label;
use trajlens_core::synth::{generate_trajectory, SynthSpec};
use trajlens_core::trajectory::canonical_serialize;

#[derive(Serialize)]
struct TruthFile {
    schema: &'static str,
    trajectory_id: String,
    labels: BTreeMap<DefectClass, Label>,
    spans: BTreeMap<DefectClass, Vec<(usize, usize)>>,
}

pub fn run(
    spec_path: Option<&Path>,
    count: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<usize, CliError> {
    let spec: SynthSpec = match spec_path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            toml::from_str(&text).map_err(|e| bad_input(path, e))?
        }
        None => SynthSpec::default(),
    };

    for i in 0..count {
        let case_seed = seed.wrapping_add(i as u64);
        let (trajectory, truth) = generate_trajectory(&spec, case_seed)
            .map_err(|e| CliError::Failed(format!("case {i}: {e}")))?;
        let traj_path: PathBuf = out_dir.join(format!("synth-{i:04}.traj"));
        write_atomic(&traj_path, &canonical_serialize(&trajectory))
            .map_err(io_err(&traj_path))?;
        let truth_file = TruthFile {
            schema: TRUTH_SCHEMA,
            trajectory_id: trajectory.trajectory_id.clone(),
            labels: truth.labels,
            spans: truth.spans,
        };
        let truth_path = out_dir.join(format!("synth-{i:04}.truth.json"));
        write_atomic(&truth_path, &to_json_bytes(&truth_file)).map_err(io_err(&truth_path))?;
    }
    Ok(0)
}
