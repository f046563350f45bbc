//! Correlations between defect risks and outcomes, and among defects.

use super::EvaluationError;
use crate::detectors::DefectClass;
use crate::trajectory::Outcome;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Point-biserial correlation between each defect's posterior risk and the
/// task-failure indicator. Zero-variance columns come back as `None`.
pub fn defect_failure_correlation(
    risks: &[BTreeMap<DefectClass, f64>],
    outcomes: &[Outcome],
) -> Result<BTreeMap<DefectClass, Option<f64>>, EvaluationError> {
    if risks.len() != outcomes.len() {
        return Err(EvaluationError::Misaligned(format!(
            "{} risk rows vs {} outcomes",
            risks.len(),
            outcomes.len()
        )));
    }
    if risks.len() < 2 {
        return Err(EvaluationError::TooFewCases {
            needed: 2,
            got: risks.len(),
        });
    }
    let failure: Vec<f64> = outcomes
        .iter()
        .map(|o| if *o == Outcome::Failure { 1.0 } else { 0.0 })
        .collect();
    let mut out = BTreeMap::new();
    for class in DefectClass::ALL {
        let column: Vec<f64> = risks
            .iter()
            .map(|row| row.get(&class).copied().unwrap_or(0.0))
            .collect();
        out.insert(class, pearson(&column, &failure));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    /// Class order matches `DefectClass::ALL`.
    pub classes: Vec<DefectClass>,
    /// Row-major; `None` marks a zero-variance pairing.
    pub values: Vec<Vec<Option<f64>>>,
}

/// Pairwise Pearson correlations among per-case defect risks. Rows are
/// cases; columns follow `DefectClass::ALL`.
pub fn defect_correlation_matrix(
    rows: &[Vec<f64>],
) -> Result<CorrelationMatrix, EvaluationError> {
    let k = DefectClass::ALL.len();
    if rows.len() < 2 {
        return Err(EvaluationError::TooFewCases {
            needed: 2,
            got: rows.len(),
        });
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(EvaluationError::Misaligned(format!(
            "risk rows must have {k} columns"
        )));
    }
    let column = |j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).collect() };
    let mut values = vec![vec![None; k]; k];
    for i in 0..k {
        values[i][i] = Some(1.0);
        for j in (i + 1)..k {
            let v = pearson(&column(i), &column(j));
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(CorrelationMatrix {
        classes: DefectClass::ALL.to_vec(),
        values,
    })
}
