//! Evaluation metrics: top-1 accuracy and mean average precision.

use crate::error::{HarnessError, Result};
use serde::{Deserialize, Serialize};

/// Top-1 accuracy of per-sample score rows against class indices.
/// Ties break toward the lowest class index.
pub fn accuracy(scores: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(HarnessError::Data(format!(
            "{} score rows vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let mut hits = 0usize;
    for (row, &label) in scores.iter().zip(labels) {
        let mut best = 0usize;
        for (k, &s) in row.iter().enumerate() {
            if s > row[best] {
                best = k;
            }
        }
        if best == label {
            hits += 1;
        }
    }
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    pub map: f64,
    /// Per-class AP; `None` for classes without positives.
    pub per_class: Vec<Option<f64>>,
    pub skipped_classes: Vec<usize>,
}

/// Average precision of one class: mean of precision-at-k over the
/// positives in the score-descending ranking. Ties break by stable
/// sample index (earlier sample ranks first). Returns `None` without
/// positives.
pub fn average_precision(scores: &[f64], positives: &[bool]) -> Option<f64> {
    let n_pos = positives.iter().filter(|&&p| p).count();
    if n_pos == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if positives[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Some(sum / n_pos as f64)
}

/// Unweighted mean over classes that have at least one positive.
/// `labels` is multi-hot, one row per sample.
pub fn mean_average_precision(scores: &[Vec<f64>], labels: &[Vec<bool>]) -> Result<MapReport> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(HarnessError::Data(format!(
            "{} score rows vs {} label rows",
            scores.len(),
            labels.len()
        )));
    }
    let k = scores[0].len();
    if labels.iter().any(|l| l.len() != k) || scores.iter().any(|s| s.len() != k) {
        return Err(HarnessError::Data("ragged score/label rows".into()));
    }
    if labels.iter().all(|l| l.iter().all(|&b| !b)) {
        return Err(HarnessError::Data(
            "no positive labels in any class".into(),
        ));
    }
    let mut per_class = Vec::with_capacity(k);
    let mut skipped = Vec::new();
    let mut sum = 0.0;
    let mut counted = 0usize;
    for c in 0..k {
        let col_scores: Vec<f64> = scores.iter().map(|s| s[c]).collect();
        let col_pos: Vec<bool> = labels.iter().map(|l| l[c]).collect();
        match average_precision(&col_scores, &col_pos) {
            Some(ap) => {
                sum += ap;
                counted += 1;
                per_class.push(Some(ap));
            }
            None => {
                skipped.push(c);
                per_class.push(None);
            }
        }
    }
    Ok(MapReport {
        map: sum / counted as f64,
        per_class,
        skipped_classes: skipped,
    })
}
