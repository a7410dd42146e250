use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::DomainLabel;

/// Rows are true classes, columns are predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<DomainLabel>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: &[DomainLabel]) -> Self {
        Self {
            classes: classes.to_vec(),
            counts: vec![vec![0; classes.len()]; classes.len()],
        }
    }

    pub fn from_counts(classes: &[DomainLabel], counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        if counts.len() != classes.len() || counts.iter().any(|r| r.len() != classes.len()) {
            return Err(EvalError::Shape(format!(
                "{} classes need a {0}x{0} count matrix",
                classes.len()
            )));
        }
        Ok(Self {
            classes: classes.to_vec(),
            counts,
        })
    }

    /// Tallies (truth, prediction) pairs. Labels outside `classes` are ignored.
    pub fn from_predictions(classes: &[DomainLabel], truth: &[DomainLabel], predicted: &[DomainLabel]) -> Self {
        let mut cm = Self::new(classes);
        for (t, p) in truth.iter().zip(predicted) {
            cm.add(*t, *p);
        }
        cm
    }

    pub fn add(&mut self, truth: DomainLabel, predicted: DomainLabel) {
        let idx = |l: DomainLabel| self.classes.iter().position(|c| *c == l);
        if let (Some(i), Some(j)) = (idx(truth), idx(predicted)) {
            self.counts[i][j] += 1;
        }
    }

    /// Elementwise sum; both matrices must use the same class order.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<(), EvalError> {
        if self.classes != other.classes {
            return Err(EvalError::Shape("confusion matrices use different classes".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    /// The same matrix with classes reordered: `order[i]` is the old index
    /// of the new class `i`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            classes: order.iter().map(|&i| self.classes[i]).collect(),
            counts: order
                .iter()
                .map(|&i| order.iter().map(|&j| self.counts[i][j]).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: DomainLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when nothing was predicted as this class, so precision is 0 by
    /// convention.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub roc_auc_ovr: Option<f64>,
    /// Classes left out of the ROC-AUC mean for lack of positives or negatives.
    pub roc_auc_skipped: Vec<DomainLabel>,
    pub zero_r_accuracy: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub provenance: BTreeMap<String, String>,
}

impl MetricsReport {
    pub fn class(&self, label: DomainLabel) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|c| c.label == label)
    }
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Precision, recall and F1 per class plus their unweighted means and
/// overall accuracy. Zero denominators give 0 and set the class flag.
pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if cm.classes.is_empty() || total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let per_class: Vec<ClassMetrics> = cm
        .classes
        .iter()
        .enumerate()
        .map(|(k, &label)| {
            let tp = cm.counts[k][k];
            let (precision, precision_undefined) = ratio(tp, cm.col_sum(k));
            let (recall, recall_undefined) = ratio(tp, cm.row_sum(k));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                label,
                precision,
                recall,
                f1,
                support: cm.row_sum(k),
                precision_undefined,
                recall_undefined,
            }
        })
        .collect();
    let k = per_class.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    Ok(MetricsReport {
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        accuracy: cm.trace() as f64 / total as f64,
        per_class,
        roc_auc_ovr: None,
        roc_auc_skipped: Vec::new(),
        zero_r_accuracy: None,
        confusion: cm.clone(),
        provenance: BTreeMap::new(),
    })
}

/// Area under the ROC curve from the rank-sum statistic; tied scores share
/// their mid-rank. `None` when either side is empty.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = crate::stats::mid_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocAuc {
    /// Mean over the classes that could be scored.
    pub macro_auc: Option<f64>,
    pub per_class: Vec<(DomainLabel, Option<f64>)>,
}

impl RocAuc {
    pub fn skipped(&self) -> Vec<DomainLabel> {
        self.per_class.iter().filter(|(_, a)| a.is_none()).map(|(l, _)| *l).collect()
    }
}

/// One-vs-rest ROC-AUC. `scores[i][k]` is sample `i`'s score for
/// `classes[k]`.
pub fn roc_auc_ovr(labels: &[DomainLabel], classes: &[DomainLabel], scores: &[Vec<f64>]) -> Result<RocAuc, EvalError> {
    if labels.len() != scores.len() || scores.iter().any(|s| s.len() != classes.len()) {
        return Err(EvalError::Shape("scores must be N x K".into()));
    }
    if labels.is_empty() {
        return Err(EvalError::EmptyMatrix);
    }
    let per_class: Vec<(DomainLabel, Option<f64>)> = classes
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let col: Vec<f64> = scores.iter().map(|s| s[k]).collect();
            let pos: Vec<bool> = labels.iter().map(|&l| l == c).collect();
            (c, binary_auc(&col, &pos))
        })
        .collect();
    let scored: Vec<f64> = per_class.iter().filter_map(|(_, a)| *a).collect();
    let macro_auc = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
    Ok(RocAuc { macro_auc, per_class })
}

/// The most frequent training label (ties to the first in label order).
pub fn modal_label(train_labels: &[DomainLabel]) -> Option<DomainLabel> {
    let mut counts: BTreeMap<DomainLabel, usize> = BTreeMap::new();
    for &l in train_labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts.iter().fold(None, |best: Option<(DomainLabel, usize)>, (&l, &n)| match best {
        Some((_, m)) if m >= n => best,
        _ => Some((l, n)),
    })
    .map(|(l, _)| l)
}

/// Accuracy of always predicting the modal training label.
pub fn zero_r(train_labels: &[DomainLabel], test_labels: &[DomainLabel]) -> Result<f64, EvalError> {
    let mode = modal_label(train_labels).ok_or(EvalError::EmptyMatrix)?;
    if test_labels.is_empty() {
        return Err(EvalError::EmptyMatrix);
    }
    Ok(test_labels.iter().filter(|&&l| l == mode).count() as f64 / test_labels.len() as f64)
}

/// ZeroR accuracy from class counts alone, evaluating on the same
/// distribution it was fitted on.
pub fn zero_r_from_counts(counts: &BTreeMap<DomainLabel, usize>) -> Result<f64, EvalError> {
    let total: usize = counts.values().sum();
    let max = counts.values().copied().max().ok_or(EvalError::EmptyMatrix)?;
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    Ok(max as f64 / total as f64)
}
