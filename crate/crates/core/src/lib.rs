//! Process-level analysis of coding-agent execution trajectories.
//!
//! The pipeline: heterogeneous logs are ingested into a standardized
//! [`trajectory::Trajectory`], eleven defect detectors extract evidence and
//! scores ([`detectors`]), evidence is calibrated into posterior risks
//! ([`calibration`]), and everything is aggregated into a scorecard with
//! control-preservation subscores ([`scoring`]). The [`evaluation`] module
//! measures detector and calibration quality against annotations, and
//! [`synth`] generates labeled synthetic trajectories for oracle testing.

pub mod calibration;
pub mod detectors;
pub mod evaluation;
pub mod rng;
pub mod scoring;
pub mod synth;
pub(crate) mod text;
pub mod trajectory;
