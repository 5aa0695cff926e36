//! Frame-level ROC AUC and class-wise F1.

use crate::error::{Error, Result};

/// Mann-Whitney AUC: `(#{pos > neg} + ½·#{pos = neg}) / (#pos · #neg)`.
///
/// Runs in `O(n log n)` by ranking the pooled scores with tied groups
/// sharing their average rank.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::dim(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "ROC AUC needs both classes, got {pos} positive and {neg} negative frames"
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("score passed to roc_auc".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the rank sum of positives keeps tied half-ranks integral.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share the average (i + j + 2) / 2.
        let twice_avg = (i + j + 2) as u128;
        let positives = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        twice_rank_sum += twice_avg * positives;
        i = j + 1;
    }
    let (p, n) = (pos as u128, neg as u128);
    // 2·U = 2·R − p(p+1) counts each win twice and each tie once.
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2.0 * p as f64 * n as f64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct F1Report {
    /// F1 for anomaly classes `1..=C`, index 0 holding class 1.
    pub per_class: Vec<f64>,
    pub mf1: f64,
}

/// Per-class precision/recall/F1 over anomaly classes `1..=C` and their mean.
/// Any zero denominator yields an F1 of 0.
pub fn f1_metrics(pred: &[usize], truth: &[usize], classes: usize) -> Result<F1Report> {
    if pred.len() != truth.len() {
        return Err(Error::dim(format!(
            "{} predictions but {} ground-truth frames",
            pred.len(),
            truth.len()
        )));
    }
    if classes == 0 {
        return Err(Error::config("F1 needs at least one anomaly class"));
    }
    if let Some(bad) = pred.iter().chain(truth).find(|&&c| c > classes) {
        return Err(Error::config(format!("class id {bad} outside 0..={classes}")));
    }
    let mut tp = vec![0usize; classes + 1];
    let mut fp = vec![0usize; classes + 1];
    let mut fn_ = vec![0usize; classes + 1];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let per_class: Vec<f64> = (1..=classes)
        .map(|c| {
            if tp[c] + fp[c] == 0 || tp[c] + fn_[c] == 0 {
                return 0.0;
            }
            let precision = tp[c] as f64 / (tp[c] + fp[c]) as f64;
            let recall = tp[c] as f64 / (tp[c] + fn_[c]) as f64;
            if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            }
        })
        .collect();
    let mf1 = per_class.iter().sum::<f64>() / classes as f64;
    Ok(F1Report { per_class, mf1 })
}
