//! Release gate: one test per acceptance criterion, each with its pinned
//! tolerance and, where stated, a wall-clock budget. Expected values are
//! computed independently of the implementation under test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};
use trajlens_core::calibration::{
    apply_calibrator, band_severity, compute_ece, fit_calibrator, CalibrationConfig,
    CalibrationContext, CalibrationMethod, FitOptions, HorizonBucket, Severity,
};
use trajlens_core::detectors::{
    detect_all, detect_one, DefectClass, DetectorConfig, EvidenceRecord,
};
use trajlens_core::evaluation::{
    bootstrap_ranking, cohen_kappa, detection_metrics, eta_sweep, rank_shift, Label,
};
use trajlens_core::scoring::summary_score;
use trajlens_core::synth::{detector_config, generate_trajectory, Injection, SynthSpec};
use trajlens_core::trajectory::{
    strongly_connected_components, ExternalOpKind, Outcome, Source, Trajectory,
    TrajectoryBuilder,
};

fn budget(start: Instant, limit: Duration, what: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= limit,
        "{what} took {elapsed:?}, budget {limit:?}"
    );
}

fn finish(criterion: &str, start: Instant) {
    println!("{criterion}: PASS ({:?})", start.elapsed());
}

fn inject_spec(defect: DefectClass, intensity: f64) -> SynthSpec {
    SynthSpec {
        injections: vec![Injection {
            defect,
            intensity,
            location_hint: None,
            exempt_variant: false,
        }],
        ..SynthSpec::default()
    }
}

#[test]
fn criterion_01_f1_from_fixed_precision_and_recall() {
    let start = Instant::now();
    // tp=903, fp=172, fn=147, tn=778: precision 903/1075 = 0.84 and
    // recall 903/1050 = 0.86 exactly; f1 = 2PR/(P+R) = 0.84988...
    let mut preds = Vec::new();
    let mut labels = Vec::new();
    let mut push = |score: f64, triggered: bool, label: Label, count: usize| {
        for _ in 0..count {
            preds.push((score, triggered));
            labels.push(label);
        }
    };
    push(0.9, true, Label::Present, 903);
    push(0.9, true, Label::Absent, 172);
    push(0.1, false, Label::Present, 147);
    push(0.1, false, Label::Absent, 778);
    let m = detection_metrics(&preds, &labels).unwrap();
    assert!((m.precision.unwrap() - 0.84).abs() < 1e-12);
    assert!((m.recall.unwrap() - 0.86).abs() < 1e-12);
    let f1 = m.f1.unwrap();
    assert!((f1 - 0.85).abs() <= 0.005, "f1 {f1} outside 0.85 +/- 0.005");
    budget(start, Duration::from_secs(1), "criterion 1");
    finish("criterion 01 f1 from fixed precision/recall", start);
}

/// Synthetic labeled findings whose positive rate varies smoothly with the
/// score, so a hard 0/1 threshold is systematically miscalibrated.
fn scored_findings(seed: u64, n: usize) -> Vec<(f64, f64)> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let score: f64 = r.gen();
            let y = if r.gen_bool(0.15 + 0.7 * score) { 1.0 } else { 0.0 };
            (score, y)
        })
        .collect()
}

fn fixed_ctx() -> CalibrationContext {
    CalibrationContext {
        source: Source::Synthetic,
        horizon: HorizonBucket::Medium,
    }
}

fn fit_on(
    rows: &[(f64, f64)],
    defect: DefectClass,
) -> trajlens_core::calibration::CalibrationModel {
    let ctx = fixed_ctx();
    let data: Vec<_> = rows
        .iter()
        .map(|&(s, y)| (EvidenceRecord::scored(defect, s), ctx, y))
        .collect();
    fit_calibrator(
        &data,
        defect,
        CalibrationMethod::BetaSmoothed,
        &FitOptions::default(),
    )
    .unwrap()
}

#[test]
fn criterion_02_calibrated_ece_beats_hard_threshold() {
    let start = Instant::now();
    let mut wins = 0;
    for seed in 0..20u64 {
        let findings = scored_findings(seed, 5_000);
        let (cal, eval): (Vec<_>, Vec<_>) = findings
            .iter()
            .enumerate()
            .partition(|(i, _)| i % 2 == 0);
        let cal: Vec<(f64, f64)> = cal.into_iter().map(|(_, f)| *f).collect();
        let eval: Vec<(f64, f64)> = eval.into_iter().map(|(_, f)| *f).collect();
        let model = fit_on(&cal, DefectClass::GhostContext);
        let ctx = fixed_ctx();
        let calibrated: Vec<(f64, f64)> = eval
            .iter()
            .map(|&(s, y)| {
                let ev = EvidenceRecord::scored(DefectClass::GhostContext, s);
                (apply_calibrator(&model, &ev, &ctx).unwrap(), y)
            })
            .collect();
        let hard: Vec<(f64, f64)> = eval
            .iter()
            .map(|&(s, y)| (if s >= 0.5 { 1.0 } else { 0.0 }, y))
            .collect();
        let ece_cal = compute_ece(&calibrated, 10).unwrap();
        let ece_hard = compute_ece(&hard, 10).unwrap();
        if ece_cal < ece_hard {
            wins += 1;
        }
    }
    assert!(wins >= 18, "calibrated ECE won only {wins}/20 seeds");
    budget(start, Duration::from_secs(30), "criterion 2");
    finish("criterion 02 calibrated ECE < hard threshold", start);
}

#[test]
fn criterion_03_injected_defects_are_recovered() {
    let start = Instant::now();
    let cfg = detector_config();
    let tiers: [(&[DefectClass], f64); 2] = [
        (
            &[
                DefectClass::GhostContext,
                DefectClass::DuplicateStep,
                DefectClass::DeadStep,
                DefectClass::LongChain,
            ],
            0.95,
        ),
        (
            &[
                DefectClass::WrapperWorkflow,
                DefectClass::ContextCoupling,
                DefectClass::WeakTool,
                DefectClass::InconsistentToolInterface,
            ],
            0.80,
        ),
    ];
    for (classes, floor) in tiers {
        for &defect in classes {
            let spec = inject_spec(defect, 1.0);
            let hits = (0..200u64)
                .filter(|&seed| {
                    let (t, _) = generate_trajectory(&spec, seed).unwrap();
                    detect_one(&t, &cfg, defect).triggered
                })
                .count();
            let recall = hits as f64 / 200.0;
            assert!(
                recall >= floor,
                "{defect:?} recall {recall} below {floor}"
            );
        }
    }
    // Clean generations: every detector must stay below a 5% false-trigger
    // rate with no defect planted.
    let clean = SynthSpec::default();
    let mut false_triggers: BTreeMap<DefectClass, usize> = BTreeMap::new();
    for seed in 0..200u64 {
        let (t, _) = generate_trajectory(&clean, seed).unwrap();
        for f in detect_all(&t, &cfg) {
            if f.triggered {
                *false_triggers.entry(f.defect).or_default() += 1;
            }
        }
    }
    for (defect, count) in &false_triggers {
        assert!(
            *count as f64 / 200.0 <= 0.05,
            "{defect:?} false-triggered {count}/200 clean runs"
        );
    }
    budget(start, Duration::from_secs(120), "criterion 3");
    finish("criterion 03 injected defects recovered", start);
}

fn token_set(text: &str) -> BTreeSet<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let t = raw.trim_matches(|c: char| !c.is_alphanumeric() && c != '_');
            if t.is_empty() {
                None
            } else {
                Some(t.to_lowercase())
            }
        })
        .collect()
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count() as f64;
    inter / a.union(b).count() as f64
}

/// Small call-only trajectory: calls sit at consecutive indices (well inside
/// the pair window) with occasional file-write mutations between them.
fn dup_trajectory(seed: u64) -> Trajectory {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut b = TrajectoryBuilder::new(
        &format!("dup-{seed}"),
        Source::Other,
        Outcome::Success,
        10_000,
    );
    let names = ["alpha_probe", "beta_scan", "gamma_poll"];
    let args = ["north", "south", "east"];
    let calls = r.gen_range(1..=12);
    for _ in 0..calls {
        if r.gen_bool(0.15) {
            b.external(ExternalOpKind::FileWrite, "state.bin");
        }
        let name = names[r.gen_range(0..names.len())];
        let arg = args[r.gen_range(0..args.len())];
        b.tool_call(name, &[("target", arg)]);
    }
    b.build()
}

fn oracle_duplicate_score(t: &Trajectory, cfg: &DetectorConfig) -> f64 {
    let calls: Vec<(usize, BTreeSet<String>)> = t
        .events
        .iter()
        .filter(|e| e.event_type == trajlens_core::trajectory::EventType::ToolCall)
        .map(|e| (e.index, token_set(&e.tool.as_ref().unwrap().flattened())))
        .collect();
    let mut counted = 0usize;
    for a in 0..calls.len() {
        for b in (a + 1)..calls.len() {
            let (i, j) = (calls[a].0, calls[b].0);
            if j - i > cfg.dup_window {
                break;
            }
            if jaccard(&calls[a].1, &calls[b].1) < cfg.dup_similarity {
                continue;
            }
            let mutated = t.events[i + 1..j].iter().any(|ev| {
                matches!(
                    ev.external.as_ref().map(|o| o.op_kind),
                    Some(
                        ExternalOpKind::FileWrite
                            | ExternalOpKind::FileDelete
                            | ExternalOpKind::VcsCommit
                            | ExternalOpKind::Rollback
                    )
                )
            });
            if !mutated {
                counted += 1;
            }
        }
    }
    if calls.is_empty() {
        0.0
    } else {
        (counted as f64 / calls.len() as f64).min(1.0)
    }
}

fn reachability_partition(n: usize, edges: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
    }
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut parts = Vec::new();
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let mut part = BTreeSet::new();
        for j in 0..n {
            if reach[i][j] && reach[j][i] {
                part.insert(j);
                seen[j] = true;
            }
        }
        parts.push(part);
    }
    parts
}

fn oracle_longest_periodic(names: &[&str], max_period: usize, min_reps: usize) -> usize {
    let n = names.len();
    let mut best = 0;
    for period in 1..=max_period {
        for start in 0..n {
            for end in (start + period * min_reps)..=n {
                let window = &names[start..end];
                if window
                    .iter()
                    .enumerate()
                    .all(|(k, name)| k < period || *name == window[k - period])
                {
                    best = best.max(window.len());
                }
            }
        }
    }
    best
}

#[test]
fn criterion_04_detectors_match_brute_force_oracles() {
    let start = Instant::now();
    let cfg = DetectorConfig::default();
    for seed in 0..500u64 {
        let t = dup_trajectory(seed);
        let finding = detect_one(&t, &cfg, DefectClass::DuplicateStep);
        let oracle = oracle_duplicate_score(&t, &cfg);
        assert!(
            (finding.evidence.score - oracle).abs() < 1e-12,
            "duplicate disagreement on seed {seed}: {} vs oracle {oracle}",
            finding.evidence.score
        );
    }
    for seed in 0..500u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let n = r.gen_range(1..=8);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b && r.gen_bool(0.25) {
                    edges.push((a, b));
                }
            }
        }
        let mut fast: Vec<BTreeSet<usize>> = strongly_connected_components(n, &edges)
            .into_iter()
            .map(|c| c.into_iter().collect())
            .collect();
        let mut naive = reachability_partition(n, &edges);
        fast.sort();
        naive.sort();
        assert_eq!(fast, naive, "SCC disagreement on seed {seed}");
    }
    let pool = ["saw", "file", "clamp"];
    for seed in 0..500u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let len = r.gen_range(0..=20);
        let names: Vec<&str> = (0..len).map(|_| pool[r.gen_range(0..pool.len())]).collect();
        for (max_period, min_reps) in [(4usize, 3usize), (2, 2), (3, 4)] {
            let fast =
                trajlens_core::detectors::longest_periodic_run(&names, max_period, min_reps);
            let slow = oracle_longest_periodic(&names, max_period, min_reps);
            assert_eq!(fast, slow, "periodicity disagreement on seed {seed}");
        }
    }
    finish("criterion 04 brute-force oracle equivalence", start);
}

#[test]
fn criterion_05_summary_score_algebra() {
    let start = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1_000 {
        let q: f64 = r.gen();
        let cp: f64 = r.gen();
        let eta: f64 = r.gen();
        let pb = summary_score(q, cp, eta).unwrap();
        assert_eq!(pb, eta * q + (1.0 - eta) * cp);
        assert!(pb >= q.min(cp) - 1e-12 && pb <= q.max(cp) + 1e-12);
    }

    // Five systems whose defect-quality order is the reverse of their
    // control-preservation order.
    let mut systems = BTreeMap::new();
    for (name, q, cp) in [
        ("s1", 0.9, 0.1),
        ("s2", 0.7, 0.3),
        ("s3", 0.5, 0.5),
        ("s4", 0.3, 0.7),
        ("s5", 0.1, 0.9),
    ] {
        systems.insert(name.to_string(), (q, cp));
    }
    let sweep = eta_sweep(&systems, &[0.0, 1.0]).unwrap();
    let by_q = ["s1", "s2", "s3", "s4", "s5"];
    for (i, name) in by_q.iter().enumerate() {
        assert_eq!(sweep[1].ranking[*name], i + 1, "eta=1 ranks by q_def");
        assert_eq!(sweep[0].ranking[*name], 5 - i, "eta=0 ranks by cp");
    }

    // Symmetric pair crosses exactly at eta = 1/2; locate it by bisection.
    let (qa, cpa, qb, cpb) = (0.8, 0.2, 0.2, 0.8);
    let diff = |eta: f64| {
        summary_score(qa, cpa, eta).unwrap() - summary_score(qb, cpb, eta).unwrap()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if diff(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let crossing = 0.5 * (lo + hi);
    assert!(
        (crossing - 0.5).abs() <= 1e-9,
        "crossing at {crossing}, expected 0.5 +/- 1e-9"
    );
    finish("criterion 05 summary-score algebra", start);
}

#[test]
fn criterion_06_severity_bands_order_empirical_risk() {
    let start = Instant::now();
    let cal_cfg = CalibrationConfig::default();
    let detector = detector_config();
    for defect in [
        DefectClass::GhostContext,
        DefectClass::DuplicateStep,
        DefectClass::DeadStep,
        DefectClass::LongChain,
    ] {
        // Mixed-intensity corpus; even seeds fit the model, odd seeds are
        // scored and banded.
        let mut fit_rows = Vec::new();
        let mut eval_rows = Vec::new();
        for seed in 0..150u64 {
            let intensity = match seed % 3 {
                0 => 0.0,
                1 => 0.35,
                _ => 1.0,
            };
            let spec = inject_spec(defect, intensity);
            let (t, truth) = generate_trajectory(&spec, seed).unwrap();
            let finding = detect_one(&t, &detector, defect);
            let ctx = CalibrationContext::of(&t, &cal_cfg);
            let label = truth.labels[&defect] == Label::Present;
            if seed % 2 == 0 {
                fit_rows.push((
                    finding.evidence.clone(),
                    ctx,
                    if label { 1.0 } else { 0.0 },
                ));
            } else {
                eval_rows.push((finding.evidence, ctx, label));
            }
        }
        let opts = FitOptions {
            threshold: detector.threshold(defect),
            ..FitOptions::default()
        };
        let model =
            fit_calibrator(&fit_rows, defect, CalibrationMethod::BetaSmoothed, &opts).unwrap();
        let mut bands: BTreeMap<Severity, (usize, usize)> = BTreeMap::new();
        for (evidence, ctx, label) in &eval_rows {
            let risk = apply_calibrator(&model, evidence, ctx).unwrap();
            let sev =
                band_severity(risk, cal_cfg.delta_warning, cal_cfg.delta_error).unwrap();
            let entry = bands.entry(sev).or_default();
            entry.1 += 1;
            if *label {
                entry.0 += 1;
            }
        }
        let freq = |sev: Severity| {
            bands
                .get(&sev)
                .map(|(pos, total)| *pos as f64 / *total as f64)
        };
        let (none, warn, error) =
            (freq(Severity::None), freq(Severity::Warning), freq(Severity::Error));
        if let (Some(w), Some(e)) = (warn, error) {
            assert!(e >= w, "{defect:?}: error band {e} < warning band {w}");
        }
        if let (Some(n), Some(w)) = (none, warn) {
            assert!(w >= n, "{defect:?}: warning band {w} < none band {n}");
        }
        if let (Some(n), Some(e)) = (none, error) {
            assert!(e >= n, "{defect:?}: error band {e} < none band {n}");
        }
        assert!(
            bands.len() >= 2,
            "{defect:?}: corpus produced a single severity band, ordering is vacuous"
        );
    }
    budget(start, Duration::from_secs(120), "criterion 6");
    finish("criterion 06 severity bands order risk", start);
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run_cli(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_trajlens"))
        .args(args)
        .env_remove("TRAJLENS_CONFIG")
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "trajlens {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        out.insert(
            entry.file_name().into_string().unwrap(),
            std::fs::read(entry.path()).unwrap(),
        );
    }
    out
}

fn cli_pipeline(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let traj = root.join("traj");
    let cards = root.join("cards");
    let tables = root.join("tables");
    let config = fixture("config_hard.toml");
    let annotations = fixture("annotations.jsonl");
    let logs: Vec<PathBuf> = ["case_a", "case_b", "case_c"]
        .iter()
        .map(|id| fixture(&format!("logs/{id}.log")))
        .collect();

    let mut args: Vec<String> = vec!["ingest".into(), "--out".into(), traj.display().to_string()];
    args.extend(logs.iter().map(|p| p.display().to_string()));
    run_cli(&args.iter().map(String::as_str).collect::<Vec<_>>());

    let mut args: Vec<String> = vec![
        "analyze".into(),
        "--config".into(),
        config.display().to_string(),
        "--out".into(),
        cards.display().to_string(),
    ];
    args.extend(
        ["case_a", "case_b", "case_c"]
            .iter()
            .map(|id| traj.join(format!("{id}.traj")).display().to_string()),
    );
    run_cli(&args.iter().map(String::as_str).collect::<Vec<_>>());

    let mut args: Vec<String> = vec![
        "evaluate".into(),
        "--config".into(),
        config.display().to_string(),
        "--annotations".into(),
        annotations.display().to_string(),
        "--analyses".into(),
        "metrics,correlation,eta_sweep,rank_shift".into(),
        "--out".into(),
        tables.display().to_string(),
        "--scorecards".into(),
    ];
    args.extend(
        ["case_a", "case_b", "case_c"]
            .iter()
            .map(|id| cards.join(format!("{id}.scorecard.json")).display().to_string()),
    );
    run_cli(&args.iter().map(String::as_str).collect::<Vec<_>>());

    let mut all = BTreeMap::new();
    for (dir, prefix) in [(&traj, "traj"), (&cards, "cards"), (&tables, "tables")] {
        for (name, bytes) in dir_bytes(dir) {
            all.insert(format!("{prefix}/{name}"), bytes);
        }
    }
    all
}

#[test]
fn criterion_07_cli_pipeline_is_byte_deterministic() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let first = cli_pipeline(&tmp.path().join("a"));
    let second = cli_pipeline(&tmp.path().join("b"));
    assert_eq!(
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>()
    );
    for (name, bytes) in &first {
        assert_eq!(bytes, &second[name], "{name} differs between reruns");
    }
    finish("criterion 07 CLI pipeline determinism", start);
}

#[test]
fn criterion_08_kappa_and_rank_shift_fixtures() {
    let start = Instant::now();
    // Confusion counts (P,P)=900, (P,A)=100, (A,P)=201, (A,A)=799 over 2000
    // cases: po = 1699/2000 = 0.8495, pe = 0.5, kappa = 0.699 exactly.
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut push = |la: Label, lb: Label, count: usize| {
        for _ in 0..count {
            a.push(la);
            b.push(lb);
        }
    };
    push(Label::Present, Label::Present, 900);
    push(Label::Present, Label::Absent, 100);
    push(Label::Absent, Label::Present, 201);
    push(Label::Absent, Label::Absent, 799);
    let kappa = cohen_kappa(&a, &b, true).unwrap().unwrap();
    assert!(
        (kappa - 0.699).abs() <= 0.001,
        "kappa {kappa} outside 0.699 +/- 0.001"
    );

    // System ranked 4th by outcome but 6th by summary score: shift -2.
    let outcome: BTreeMap<String, f64> = [
        ("sys_a", 0.9),
        ("sys_b", 0.8),
        ("sys_c", 0.7),
        ("sys_x", 0.6),
        ("sys_d", 0.5),
        ("sys_e", 0.4),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), *v))
    .collect();
    let pb: BTreeMap<String, f64> = [
        ("sys_a", 0.9),
        ("sys_b", 0.8),
        ("sys_c", 0.7),
        ("sys_d", 0.6),
        ("sys_e", 0.5),
        ("sys_x", 0.4),
    ]
    .iter()
    .map(|(k, v)| (k.to_string(), *v))
    .collect();
    let shifts = rank_shift(&outcome, &pb).unwrap();
    assert_eq!(shifts["sys_x"], -2);
    budget(start, Duration::from_secs(1), "criterion 8");
    finish("criterion 08 kappa and rank-shift fixtures", start);
}

#[test]
fn criterion_09_bootstrap_ranking_sanity() {
    let start = Instant::now();
    let cases = 200usize;
    let strata: Vec<String> = (0..cases).map(|i| format!("stratum_{}", i % 4)).collect();

    // Zero variance: every resample reproduces the same means, so ranks
    // never move.
    let constant: BTreeMap<String, Vec<f64>> = (0..11)
        .map(|i| (format!("sys_{i:02}"), vec![0.05 * i as f64; cases]))
        .collect();
    let stats = bootstrap_ranking(&constant, 1000, &strata, 17).unwrap();
    for s in &stats {
        assert_eq!(s.rank_std, 0.0, "{} rank drifted", s.system);
    }
    let best = stats.iter().find(|s| s.system == "sys_10").unwrap();
    assert_eq!(best.top1_freq, 1.0);

    // Dominance with noise: the top system's worst case beats everyone
    // else's best case, so it wins every replicate.
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let mut noisy: BTreeMap<String, Vec<f64>> = (0..10)
        .map(|i| {
            let vals = (0..cases).map(|_| r.gen_range(0.0..0.5)).collect();
            (format!("sys_{i:02}"), vals)
        })
        .collect();
    noisy.insert(
        "sys_top".into(),
        (0..cases).map(|_| r.gen_range(0.8..0.9)).collect(),
    );
    let stats = bootstrap_ranking(&noisy, 1000, &strata, 17).unwrap();
    let top = stats.iter().find(|s| s.system == "sys_top").unwrap();
    assert_eq!(top.top1_freq, 1.0);
    assert_eq!(top.rank_std, 0.0);
    budget(start, Duration::from_secs(60), "criterion 9");
    finish("criterion 09 bootstrap ranking sanity", start);
}

#[test]
fn criterion_10_self_sampled_labels_are_calibrated() {
    let start = Instant::now();
    let model = fit_on(&scored_findings(1234, 5_000), DefectClass::DeadStep);
    let ctx = fixed_ctx();
    let mut r = ChaCha8Rng::seed_from_u64(4321);
    let pairs: Vec<(f64, f64)> = (0..20_000)
        .map(|_| {
            let score: f64 = r.gen();
            let ev = EvidenceRecord::scored(DefectClass::DeadStep, score);
            let risk = apply_calibrator(&model, &ev, &ctx).unwrap();
            let y = if r.gen_bool(risk.clamp(0.0, 1.0)) { 1.0 } else { 0.0 };
            (risk, y)
        })
        .collect();
    let ece = compute_ece(&pairs, 10).unwrap();
    assert!(ece < 0.03, "self-sampled ECE {ece} >= 0.03");
    finish("criterion 10 self-sampled calibration", start);
}
