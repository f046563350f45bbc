//! Ranking stability: stratified bootstrap over cases, eta sweeps, and
//! outcome-vs-summary rank shifts.

use super::{min_ranks, EvaluationError};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRankStats {
    pub system: String,
    pub mean_score: f64,
    pub mean_rank: f64,
    pub rank_std: f64,
    pub top1_freq: f64,
    pub top3_freq: f64,
    /// 95% percentile interval of the per-replicate mean score.
    pub score_ci: (f64, f64),
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Resample case indices within each stratum, with replacement, using a
/// per-replicate substream so results do not depend on scheduling.
fn resample(strata: &[String], seed: u64, replicate: usize) -> Vec<usize> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, key) in strata.iter().enumerate() {
        groups.entry(key).or_default().push(i);
    }
    let mut r = rng::indexed_substream(seed, "bootstrap", replicate as u64);
    let mut picked = Vec::with_capacity(strata.len());
    for members in groups.values() {
        for _ in 0..members.len() {
            picked.push(members[r.gen_range(0..members.len())]);
        }
    }
    picked
}

/// Stratified bootstrap over per-case scores shared by all systems.
/// Each replicate recomputes mean scores and min-tie descending ranks.
pub fn bootstrap_ranking(
    systems: &BTreeMap<String, Vec<f64>>,
    replicates: usize,
    strata: &[String],
    seed: u64,
) -> Result<Vec<SystemRankStats>, EvaluationError> {
    if replicates < 1 {
        return Err(EvaluationError::BadReplicates);
    }
    if systems.is_empty() || strata.is_empty() {
        return Err(EvaluationError::TooFewCases {
            needed: 1,
            got: 0,
        });
    }
    for (name, scores) in systems {
        if scores.len() != strata.len() {
            return Err(EvaluationError::Misaligned(format!(
                "system {name} has {} cases, strata describe {}",
                scores.len(),
                strata.len()
            )));
        }
    }
    let names: Vec<&String> = systems.keys().collect();
    let mut rank_sum = vec![0.0f64; names.len()];
    let mut rank_sq_sum = vec![0.0f64; names.len()];
    let mut top1 = vec![0usize; names.len()];
    let mut top3 = vec![0usize; names.len()];
    let mut replicate_means = vec![Vec::with_capacity(replicates); names.len()];

    for rep in 0..replicates {
        let picked = resample(strata, seed, rep);
        let means: Vec<f64> = names
            .iter()
            .map(|name| {
                let scores = &systems[*name];
                picked.iter().map(|&i| scores[i]).sum::<f64>() / picked.len() as f64
            })
            .collect();
        let ranks = min_ranks(&means);
        for (i, &rank) in ranks.iter().enumerate() {
            rank_sum[i] += rank as f64;
            rank_sq_sum[i] += (rank * rank) as f64;
            if rank == 1 {
                top1[i] += 1;
            }
            if rank <= 3 {
                top3[i] += 1;
            }
            replicate_means[i].push(means[i]);
        }
    }

    let r = replicates as f64;
    Ok(names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mean_rank = rank_sum[i] / r;
            let variance = (rank_sq_sum[i] / r - mean_rank * mean_rank).max(0.0);
            let mut means = replicate_means[i].clone();
            means.sort_by(f64::total_cmp);
            SystemRankStats {
                system: (*name).clone(),
                mean_score: systems[*name].iter().sum::<f64>()
                    / systems[*name].len() as f64,
                mean_rank,
                rank_std: variance.sqrt(),
                top1_freq: top1[i] as f64 / r,
                top3_freq: top3[i] as f64 / r,
                score_ci: (percentile(&means, 0.025), percentile(&means, 0.975)),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaPoint {
    pub eta: f64,
    pub pb: BTreeMap<String, f64>,
    /// Descending min-tie ranks.
    pub ranking: BTreeMap<String, usize>,
}

/// PB curves over an eta grid for systems described by (q_def, cp).
pub fn eta_sweep(
    systems: &BTreeMap<String, (f64, f64)>,
    grid: &[f64],
) -> Result<Vec<EtaPoint>, EvaluationError> {
    if grid.is_empty() {
        return Err(EvaluationError::EmptyGrid);
    }
    Ok(grid
        .iter()
        .map(|&eta| {
            let names: Vec<&String> = systems.keys().collect();
            let pbs: Vec<f64> = names
                .iter()
                .map(|n| {
                    let (q_def, cp) = systems[*n];
                    eta * q_def + (1.0 - eta) * cp
                })
                .collect();
            let ranks = min_ranks(&pbs);
            EtaPoint {
                eta,
                pb: names
                    .iter()
                    .zip(&pbs)
                    .map(|(n, p)| ((*n).clone(), *p))
                    .collect(),
                ranking: names
                    .iter()
                    .zip(&ranks)
                    .map(|(n, r)| ((*n).clone(), *r))
                    .collect(),
            }
        })
        .collect())
}

/// Outcome rank minus summary-score rank per system; positive means the
/// summary ranks the system higher than its outcome does.
pub fn rank_shift(
    outcome_scores: &BTreeMap<String, f64>,
    pb_scores: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, i64>, EvaluationError> {
    if outcome_scores.len() != pb_scores.len()
        || !outcome_scores.keys().all(|k| pb_scores.contains_key(k))
    {
        return Err(EvaluationError::Misaligned(
            "outcome and summary tables cover different systems".into(),
        ));
    }
    let names: Vec<&String> = outcome_scores.keys().collect();
    let outcome: Vec<f64> = names.iter().map(|n| outcome_scores[*n]).collect();
    let pb: Vec<f64> = names.iter().map(|n| pb_scores[*n]).collect();
    let ranks_outcome = min_ranks(&outcome);
    let ranks_pb = min_ranks(&pb);
    Ok(names
        .iter()
        .enumerate()
        .map(|(i, n)| ((*n).clone(), ranks_outcome[i] as i64 - ranks_pb[i] as i64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strata(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{}", i % 2)).collect()
    }

    #[test]
    fn dominant_system_always_ranks_first() {
        let mut systems = BTreeMap::new();
        systems.insert("top".to_string(), vec![0.9, 0.95, 0.92, 0.91]);
        systems.insert("mid".to_string(), vec![0.5, 0.55, 0.52, 0.51]);
        systems.insert("low".to_string(), vec![0.1, 0.15, 0.12, 0.11]);
        let stats = bootstrap_ranking(&systems, 500, &strata(4), 7).unwrap();
        let top = stats.iter().find(|s| s.system == "top").unwrap();
        assert_eq!(top.mean_rank, 1.0);
        assert_eq!(top.top1_freq, 1.0);
        assert_eq!(top.rank_std, 0.0);
    }

    #[test]
    fn single_replicate_collapses_ci() {
        let mut systems = BTreeMap::new();
        systems.insert("a".to_string(), vec![0.4, 0.6]);
        let stats = bootstrap_ranking(&systems, 1, &strata(2), 1).unwrap();
        assert_eq!(stats[0].score_ci.0, stats[0].score_ci.1);
    }

    #[test]
    fn zero_case_variance_means_zero_rank_std() {
        let mut systems = BTreeMap::new();
        systems.insert("a".to_string(), vec![0.7; 6]);
        systems.insert("b".to_string(), vec![0.4; 6]);
        let stats = bootstrap_ranking(&systems, 200, &strata(6), 3).unwrap();
        for s in stats {
            assert_eq!(s.rank_std, 0.0);
        }
    }

    #[test]
    fn statistics_match_independent_resampling_loop() {
        let mut systems = BTreeMap::new();
        systems.insert("a".to_string(), vec![0.9, 0.2, 0.7, 0.4]);
        systems.insert("b".to_string(), vec![0.3, 0.8, 0.6, 0.5]);
        systems.insert("c".to_string(), vec![0.5, 0.5, 0.5, 0.9]);
        let keys = strata(4);
        let (replicates, seed) = (1000, 42);
        let stats = bootstrap_ranking(&systems, replicates, &keys, seed).unwrap();

        // Second implementation of the same protocol, written against the
        // documented substream derivation instead of the helper above.
        let names = ["a", "b", "c"];
        let mut rank_totals = [0.0f64; 3];
        for rep in 0..replicates {
            let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, k) in keys.iter().enumerate() {
                groups.entry(k).or_default().push(i);
            }
            let mut r = rng::indexed_substream(seed, "bootstrap", rep as u64);
            let mut picked = Vec::new();
            for members in groups.values() {
                for _ in 0..members.len() {
                    picked.push(members[r.gen_range(0..members.len())]);
                }
            }
            let means: Vec<f64> = names
                .iter()
                .map(|n| {
                    picked.iter().map(|&i| systems[*n][i]).sum::<f64>()
                        / picked.len() as f64
                })
                .collect();
            for (i, m) in means.iter().enumerate() {
                rank_totals[i] += (1 + means.iter().filter(|o| **o > *m).count()) as f64;
            }
        }
        for (i, n) in names.iter().enumerate() {
            let got = stats.iter().find(|s| s.system == *n).unwrap().mean_rank;
            assert!((got - rank_totals[i] / replicates as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_replicates_and_mismatches_are_rejected() {
        let mut systems = BTreeMap::new();
        systems.insert("a".to_string(), vec![0.5, 0.5]);
        assert!(matches!(
            bootstrap_ranking(&systems, 0, &strata(2), 1),
            Err(EvaluationError::BadReplicates)
        ));
        assert!(matches!(
            bootstrap_ranking(&systems, 10, &strata(3), 1),
            Err(EvaluationError::Misaligned(_))
        ));
    }

    #[test]
    fn eta_endpoints_reproduce_component_rankings() {
        let mut systems = BTreeMap::new();
        systems.insert("p".to_string(), (0.8, 0.6));
        systems.insert("q".to_string(), (0.6, 0.8));
        let sweep = eta_sweep(&systems, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(sweep[0].ranking["q"], 1); // eta 0: cp ordering
        assert_eq!(sweep[2].ranking["p"], 1); // eta 1: q_def ordering
        assert!((sweep[1].pb["p"] - sweep[1].pb["q"]).abs() < 1e-12); // crossing
        assert!(eta_sweep(&systems, &[]).is_err());
    }

    #[test]
    fn rank_shift_matches_hand_rankings() {
        // Seven systems; one sits 4th by outcome and 6th by summary score,
        // giving a shift of -2.
        let mut outcome = BTreeMap::new();
        let mut pb = BTreeMap::new();
        for (i, name) in ["s1", "s2", "s3", "s4", "s5", "s6", "s7"].iter().enumerate() {
            outcome.insert(name.to_string(), 1.0 - i as f64 * 0.1);
        }
        // Summary ordering demotes s4 below s5 and s6.
        let pb_order = ["s1", "s2", "s3", "s5", "s6", "s4", "s7"];
        for (i, name) in pb_order.iter().enumerate() {
            pb.insert(name.to_string(), 1.0 - i as f64 * 0.1);
        }
        let shifts = rank_shift(&outcome, &pb).unwrap();
        assert_eq!(shifts["s4"], -2);
        assert_eq!(shifts.values().sum::<i64>(), 0);
    }

    #[test]
    fn identical_orderings_shift_zero() {
        let mut outcome = BTreeMap::new();
        outcome.insert("a".to_string(), 0.9);
        outcome.insert("b".to_string(), 0.5);
        let shifts = rank_shift(&outcome, &outcome.clone()).unwrap();
        assert!(shifts.values().all(|s| *s == 0));

        let mut pb = BTreeMap::new();
        pb.insert("a".to_string(), 0.5);
        pb.insert("b".to_string(), 0.9);
        let reversed = rank_shift(&outcome, &pb).unwrap();
        assert_eq!(reversed["a"], -1);
        assert_eq!(reversed["b"], 1);
    }
}
