//! Detection quality metrics: precision/recall/F1 plus ranking metrics
//! (average precision with step interpolation, AUROC with midranks).

use super::{EvaluationError, Label};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub average_precision: Option<f64>,
    pub auroc: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    /// Explains any absent metric.
    pub note: Option<String>,
}

/// Area under the precision-recall curve, descending-score step
/// interpolation. Ties keep their input order, which makes the value
/// deterministic for a fixed input ordering.
fn average_precision(scored: &[(f64, bool)]) -> Option<f64> {
    let positives = scored.iter().filter(|(_, y)| *y).count();
    if positives == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.total_cmp(&scored[a].0).then(a.cmp(&b)));
    let mut tp = 0usize;
    let mut ap = 0.0;
    for (seen, &i) in order.iter().enumerate() {
        if scored[i].1 {
            tp += 1;
            let precision = tp as f64 / (seen + 1) as f64;
            ap += precision / positives as f64;
        }
    }
    Some(ap)
}

/// Mann-Whitney rank statistic with midrank tie handling.
fn auroc(scored: &[(f64, bool)]) -> Option<f64> {
    let n_pos = scored.iter().filter(|(_, y)| *y).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0));
    let mut ranks = vec![0.0f64; scored.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scored[order[j + 1]].0 == scored[order[i]].0 {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0; // ranks are 1-based
        for &k in &order[i..=j] {
            ranks[k] = midrank;
        }
        i = j + 1;
    }
    let rank_sum: f64 = scored
        .iter()
        .zip(&ranks)
        .filter(|((_, y), _)| *y)
        .map(|(_, r)| r)
        .sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Score detector output against annotations. Exempt-labeled cases are
/// dropped before any metric is computed.
pub fn detection_metrics(
    predictions: &[(f64, bool)],
    labels: &[Label],
) -> Result<MetricBundle, EvaluationError> {
    if predictions.len() != labels.len() {
        return Err(EvaluationError::Misaligned(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let scored: Vec<(f64, bool)> = predictions
        .iter()
        .zip(labels)
        .filter(|(_, l)| **l != Label::Exempt)
        .map(|(&(score, _), l)| (score, *l == Label::Present))
        .collect();
    let triggered: Vec<bool> = predictions
        .iter()
        .zip(labels)
        .filter(|(_, l)| **l != Label::Exempt)
        .map(|(&(_, t), _)| t)
        .collect();

    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    let mut tn = 0;
    for ((_, y), t) in scored.iter().zip(&triggered) {
        match (t, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }

    let mut notes = Vec::new();
    let precision = if tp + fp > 0 {
        Some(tp as f64 / (tp + fp) as f64)
    } else {
        notes.push("no predicted positives; precision undefined");
        None
    };
    let recall = if tp + fn_ > 0 {
        Some(tp as f64 / (tp + fn_) as f64)
    } else {
        notes.push("no positive labels; recall undefined");
        None
    };
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    let ap = average_precision(&scored);
    let roc = auroc(&scored);
    if roc.is_none() {
        notes.push("labels are single-class; auroc undefined");
    }

    Ok(MetricBundle {
        precision,
        recall,
        f1,
        average_precision: ap,
        auroc: roc,
        tp,
        fp,
        fn_,
        tn,
        note: if notes.is_empty() {
            None
        } else {
            Some(notes.join("; "))
        },
    })
}
