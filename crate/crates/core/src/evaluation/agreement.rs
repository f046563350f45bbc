//! Inter-annotator agreement.

use super::{EvaluationError, Label};
use std::collections::BTreeMap;

/// Cohen's kappa over aligned label lists. Exempt labels fold into absent
/// when `fold_exempt` is set (the default convention for pre-adjudication
/// agreement). Degenerate marginals (expected agreement 1) yield `None`.
pub fn cohen_kappa(
    a: &[Label],
    b: &[Label],
    fold_exempt: bool,
) -> Result<Option<f64>, EvaluationError> {
    if a.len() != b.len() {
        return Err(EvaluationError::Misaligned(format!(
            "{} vs {} labels",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(EvaluationError::TooFewCases { needed: 1, got: 0 });
    }
    let fold = |l: &Label| match l {
        Label::Exempt if fold_exempt => Label::Absent,
        other => *other,
    };
    let n = a.len() as f64;
    let mut observed = 0.0;
    let mut marg_a: BTreeMap<Label, f64> = BTreeMap::new();
    let mut marg_b: BTreeMap<Label, f64> = BTreeMap::new();
    for (la, lb) in a.iter().zip(b) {
        let (la, lb) = (fold(la), fold(lb));
        if la == lb {
            observed += 1.0;
        }
        *marg_a.entry(la).or_default() += 1.0;
        *marg_b.entry(lb).or_default() += 1.0;
    }
    let p_o = observed / n;
    let p_e: f64 = marg_a
        .iter()
        .map(|(l, ca)| ca / n * marg_b.get(l).copied().unwrap_or(0.0) / n)
        .sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return Ok(None);
    }
    Ok(Some((p_o - p_e) / (1.0 - p_e)))
}
