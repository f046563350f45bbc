//! Deterministic stratified dev/cal/eval partitioning.

use super::EvaluationError;
use crate::rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCase {
    pub id: String,
    /// Stratification key, conventionally "{source}/{outcome}".
    pub stratum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub dev: Vec<String>,
    pub cal: Vec<String>,
    pub eval: Vec<String>,
}

/// Exact three-way partition, stratified by the case's stratum key.
///
/// Per-stratum quotas use the largest-remainder method; leftover seats are
/// matched to splits still short of their ratio, largest fractional
/// remainder first. Each stratum must hold at least as many cases as there
/// are non-zero splits so every split can draw from every stratum.
pub fn stratified_split(
    cases: &[SplitCase],
    ratios: (usize, usize, usize),
    seed: u64,
) -> Result<SplitResult, EvaluationError> {
    let total = ratios.0 + ratios.1 + ratios.2;
    if total != cases.len() {
        return Err(EvaluationError::RatioMismatch {
            expected: total,
            total: cases.len(),
        });
    }
    let ratio = [ratios.0, ratios.1, ratios.2];
    let nonzero_splits = ratio.iter().filter(|r| **r > 0).count();

    let mut strata: BTreeMap<&str, Vec<&SplitCase>> = BTreeMap::new();
    for case in cases {
        strata.entry(&case.stratum).or_default().push(case);
    }
    for (key, members) in &strata {
        if members.len() < nonzero_splits {
            return Err(EvaluationError::StratumTooSmall {
                stratum: key.to_string(),
                needed: nonzero_splits,
                available: members.len(),
            });
        }
    }

    // Quotas: floor(n_g * r_j / N) per stratum and split, then hand out the
    // leftover seats by fractional remainder while respecting both the
    // stratum's leftover count and each split's global deficit.
    let n = cases.len() as f64;
    let keys: Vec<&str> = strata.keys().copied().collect();
    let mut alloc: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    let mut leftover: BTreeMap<&str, usize> = BTreeMap::new();
    let mut deficit = ratio;
    let mut fractions: Vec<(f64, &str, usize)> = Vec::new();
    for key in &keys {
        let n_g = strata[key].len() as f64;
        let mut base = [0usize; 3];
        for (j, r_j) in ratio.iter().enumerate() {
            let quota = n_g * *r_j as f64 / n;
            base[j] = quota.floor() as usize;
            deficit[j] -= base[j];
            fractions.push((quota - quota.floor(), key, j));
        }
        leftover.insert(key, strata[key].len() - base.iter().sum::<usize>());
        alloc.insert(key, base);
    }
    fractions.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)).then(a.2.cmp(&b.2)));
    // Two passes: remainder-ordered first, then any feasible pairing, so the
    // assignment always completes (total leftovers equal total deficits).
    for _ in 0..2 {
        for &(_, key, j) in &fractions {
            if leftover[key] > 0 && deficit[j] > 0 {
                alloc.get_mut(key).expect("stratum")[j] += 1;
                *leftover.get_mut(key).expect("stratum") -= 1;
                deficit[j] -= 1;
            }
        }
    }
    debug_assert!(deficit.iter().all(|d| *d == 0));

    let mut result = SplitResult {
        dev: Vec::new(),
        cal: Vec::new(),
        eval: Vec::new(),
    };
    for key in &keys {
        let mut members: Vec<&SplitCase> = strata[key].clone();
        members.shuffle(&mut rng::substream(seed, &format!("split/{key}")));
        let counts = alloc[key];
        let mut cursor = members.into_iter();
        result.dev.extend(cursor.by_ref().take(counts[0]).map(|c| c.id.clone()));
        result.cal.extend(cursor.by_ref().take(counts[1]).map(|c| c.id.clone()));
        result.eval.extend(cursor.map(|c| c.id.clone()));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cases(n: usize, strata: &[&str]) -> Vec<SplitCase> {
        (0..n)
            .map(|i| SplitCase {
                id: format!("case-{i:03}"),
                stratum: strata[i % strata.len()].to_string(),
            })
            .collect()
    }

    #[test]
    fn sizes_are_exact_for_the_reference_ratios() {
        let cs = cases(200, &["android/success", "android/failure", "swe/success"]);
        let split = stratified_split(&cs, (80, 40, 80), 17).unwrap();
        assert_eq!(split.dev.len(), 80);
        assert_eq!(split.cal.len(), 40);
        assert_eq!(split.eval.len(), 80);
        // Disjoint and exhaustive.
        let mut all: Vec<&String> = split
            .dev
            .iter()
            .chain(&split.cal)
            .chain(&split.eval)
            .collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 200);
    }

    #[test]
    fn same_seed_is_identical_and_different_seed_is_not() {
        let cs = cases(60, &["a", "b"]);
        let one = stratified_split(&cs, (30, 10, 20), 5).unwrap();
        let two = stratified_split(&cs, (30, 10, 20), 5).unwrap();
        assert_eq!(one, two);
        let other = stratified_split(&cs, (30, 10, 20), 6).unwrap();
        assert_ne!(one, other);
    }

    #[test]
    fn single_stratum_proportions_hold() {
        let cs = cases(10, &["only"]);
        let split = stratified_split(&cs, (5, 2, 3), 2).unwrap();
        assert_eq!(split.dev.len(), 5);
        assert_eq!(split.cal.len(), 2);
        assert_eq!(split.eval.len(), 3);
    }

    #[test]
    fn stratification_balances_each_stratum() {
        let cs = cases(100, &["x", "y"]);
        let split = stratified_split(&cs, (50, 25, 25), 3).unwrap();
        let count = |ids: &[String], stratum: &str| {
            ids.iter()
                .filter(|id| {
                    cs.iter().find(|c| &c.id == *id).unwrap().stratum == stratum
                })
                .count()
        };
        assert_eq!(count(&split.dev, "x"), 25);
        assert_eq!(count(&split.cal, "x"), 13);
        assert_eq!(count(&split.eval, "y"), 13);
    }

    #[test]
    fn tiny_stratum_is_reported() {
        let mut cs = cases(9, &["big"]);
        cs.push(SplitCase {
            id: "lonely".into(),
            stratum: "tiny".into(),
        });
        let err = stratified_split(&cs, (5, 2, 3), 1);
        match err {
            Err(EvaluationError::StratumTooSmall { stratum, .. }) => {
                assert_eq!(stratum, "tiny")
            }
            other => panic!("expected stratum error, got {other:?}"),
        }
    }

    #[test]
    fn ratio_mismatch_is_rejected() {
        let cs = cases(10, &["a"]);
        assert!(matches!(
            stratified_split(&cs, (5, 2, 2), 1),
            Err(EvaluationError::RatioMismatch { .. })
        ));
    }
}
