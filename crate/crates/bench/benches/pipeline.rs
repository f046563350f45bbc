//! Benchmarks for the generate / detect / calibrate / score pipeline.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::collections::BTreeMap;
use std::hint::black_box;
use trajlens_core::calibration::{
    calibrate_findings, fit_calibrator, CalibrationConfig, CalibrationContext, CalibrationMethod,
    FitOptions,
};
use trajlens_core::detectors::{detect_all, DefectClass};
use trajlens_core::scoring::{build_scorecard, ScoringConfig};
use trajlens_core::synth::{detector_config, generate_trajectory, Injection, SynthSpec};
use trajlens_core::trajectory::{canonical_parse, canonical_serialize, Trajectory};

fn spec() -> SynthSpec {
    SynthSpec {
        event_range: (120, 160),
        injections: vec![
            Injection {
                defect: DefectClass::DuplicateStep,
                intensity: 0.8,
                location_hint: None,
                exempt_variant: false,
            },
            Injection {
                defect: DefectClass::GhostContext,
                intensity: 0.6,
                location_hint: None,
                exempt_variant: false,
            },
        ],
        ..SynthSpec::default()
    }
}

fn corpus(n: usize) -> Vec<Trajectory> {
    let spec = spec();
    (0..n)
        .map(|i| generate_trajectory(&spec, i as u64).expect("feasible spec").0)
        .collect()
}

fn bench_generate(c: &mut Criterion) {
    let spec = spec();
    let mut seed = 0u64;
    c.bench_function("synth/generate_trajectory", |b| {
        b.iter(|| {
            seed = seed.wrapping_add(1);
            black_box(generate_trajectory(&spec, seed).expect("feasible spec"))
        })
    });
}

fn bench_detect(c: &mut Criterion) {
    let trajectories = corpus(32);
    let cfg = detector_config();
    let mut i = 0usize;
    c.bench_function("detectors/detect_all", |b| {
        b.iter(|| {
            i = (i + 1) % trajectories.len();
            black_box(detect_all(&trajectories[i], &cfg))
        })
    });
}

fn bench_calibrated_scoring(c: &mut Criterion) {
    let trajectories = corpus(32);
    let detector = detector_config();
    let calibration = CalibrationConfig::default();
    let scoring = ScoringConfig::default();

    // One beta-smoothed model per defect, fit on scores from the corpus.
    let mut rows: BTreeMap<DefectClass, Vec<_>> = BTreeMap::new();
    for t in &trajectories {
        let ctx = CalibrationContext::of(t, &calibration);
        for f in detect_all(t, &detector) {
            let label = if f.triggered { 1.0 } else { 0.0 };
            rows.entry(f.defect)
                .or_default()
                .push((f.evidence.clone(), ctx, label));
        }
    }
    let mut models = BTreeMap::new();
    for (defect, data) in &rows {
        let opts = FitOptions {
            threshold: detector.threshold(*defect),
            ..FitOptions::default()
        };
        let model =
            fit_calibrator(data, *defect, CalibrationMethod::BetaSmoothed, &opts).expect("fit");
        models.insert(*defect, model);
    }

    let mut i = 0usize;
    c.bench_function("pipeline/detect_calibrate_score", |b| {
        b.iter(|| {
            i = (i + 1) % trajectories.len();
            let t = &trajectories[i];
            let findings = detect_all(t, &detector);
            let ctx = CalibrationContext::of(t, &calibration);
            let calibrated =
                calibrate_findings(&findings, &models, &ctx, &calibration).expect("calibrate");
            black_box(build_scorecard(t, &calibrated, scoring.eta, &scoring).expect("score"))
        })
    });

    c.bench_function("calibration/fit_calibrator", |b| {
        let (defect, data) = rows.iter().next().expect("rows");
        let opts = FitOptions {
            threshold: detector.threshold(*defect),
            ..FitOptions::default()
        };
        b.iter(|| {
            black_box(
                fit_calibrator(data, *defect, CalibrationMethod::BetaSmoothed, &opts)
                    .expect("fit"),
            )
        })
    });

    let bytes: Vec<Vec<u8>> = trajectories.iter().map(canonical_serialize).collect();
    let mut j = 0usize;
    c.bench_function("trajectory/canonical_round_trip", |b| {
        b.iter_batched(
            || {
                j = (j + 1) % bytes.len();
                bytes[j].clone()
            },
            |raw| black_box(canonical_parse(&raw).expect("parse")),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(
    benches,
    bench_generate,
    bench_detect,
    bench_calibrated_scoring
);
criterion_main!(benches);
