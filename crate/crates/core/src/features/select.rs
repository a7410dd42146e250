use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureGroup, FeatureMatrix, FeaturesError};
use crate::corpus::DomainLabel;

const TOLERANCE: f64 = 1e-4;
const MAX_EPOCHS: usize = 1000;
/// Relative slack when comparing an importance to the mean, so that
/// importances equal up to rounding are all kept.
const TIE_SLACK: f64 = 1e-9;

/// One-vs-rest linear SVM weights over the candidate (categorical) columns
/// and the resulting keep list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionModel {
    pub classes: Vec<DomainLabel>,
    /// `weights[k][j]` is class `k`'s weight on `candidates[j]`.
    pub weights: Vec<Vec<f64>>,
    pub c: f64,
    /// Column indices (in the fitted matrix) that were subject to selection.
    pub candidates: Vec<usize>,
    pub importances: Vec<f64>,
    /// Column indices that survive `transform`, ascending. Non-candidate
    /// columns always survive.
    pub kept_columns: Vec<usize>,
    pub n_input_cols: usize,
}

impl SelectionModel {
    /// Drops the unselected candidate columns. Values are never altered.
    pub fn transform(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix, FeaturesError> {
        if matrix.n_cols() != self.n_input_cols {
            return Err(FeaturesError::ColumnMismatch {
                expected: self.n_input_cols,
                found: matrix.n_cols(),
            });
        }
        Ok(matrix.select_columns(&self.kept_columns))
    }

    /// A model that keeps every column; used when selection is disabled or
    /// there are no categorical columns.
    pub fn identity(n_cols: usize) -> Self {
        Self {
            classes: Vec::new(),
            weights: Vec::new(),
            c: 0.0,
            candidates: Vec::new(),
            importances: Vec::new(),
            kept_columns: (0..n_cols).collect(),
            n_input_cols: n_cols,
        }
    }
}

/// Sparse view of one row restricted to the candidate columns, with a
/// trailing bias feature of value 1.
struct SparseRow {
    idx: Vec<usize>,
    val: Vec<f64>,
    sq_norm: f64,
}

/// Binary hinge-loss SVM with L2 penalty, solved in the dual by coordinate
/// descent. Minimises `0.5 |w|^2 + c * sum(max(0, 1 - y_i w.x_i))` where the
/// last weight acts on the bias feature. Returns `dim + 1` weights.
fn fit_binary(rows: &[SparseRow], y: &[f64], dim: usize, c: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rows.len();
    let mut w = vec![0.0; dim + 1];
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..MAX_EPOCHS {
        order.shuffle(rng);
        let mut max_pg = f64::NEG_INFINITY;
        let mut min_pg = f64::INFINITY;
        for &i in &order {
            let r = &rows[i];
            if r.sq_norm == 0.0 {
                continue;
            }
            let dot: f64 = r.idx.iter().zip(&r.val).map(|(&j, &v)| w[j] * v).sum();
            let g = y[i] * dot - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            max_pg = max_pg.max(pg);
            min_pg = min_pg.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / r.sq_norm).clamp(0.0, c);
                let delta = (alpha[i] - old) * y[i];
                for (&j, &v) in r.idx.iter().zip(&r.val) {
                    w[j] += delta * v;
                }
            }
        }
        if max_pg - min_pg < TOLERANCE {
            break;
        }
    }
    w
}

/// Fits one-vs-rest linear SVMs on the categorical columns of `matrix` and
/// keeps those whose maximum absolute weight reaches the mean importance.
pub fn select_features(matrix: &FeatureMatrix, c: f64, seed: u64) -> Result<SelectionModel, FeaturesError> {
    let labels = matrix.require_labels()?;
    let mut classes: Vec<DomainLabel> = labels.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(FeaturesError::DegenerateLabels);
    }
    let candidates = matrix.group_columns(FeatureGroup::Categorical);
    if candidates.is_empty() {
        let mut m = SelectionModel::identity(matrix.n_cols());
        m.classes = classes;
        m.c = c;
        return Ok(m);
    }
    let dim = candidates.len();
    let rows: Vec<SparseRow> = matrix
        .rows()
        .map(|row| {
            let mut idx = Vec::new();
            let mut val = Vec::new();
            for (j, &col) in candidates.iter().enumerate() {
                if row[col] != 0.0 {
                    idx.push(j);
                    val.push(row[col]);
                }
            }
            idx.push(dim);
            val.push(1.0);
            let sq_norm = val.iter().map(|v| v * v).sum();
            SparseRow { idx, val, sq_norm }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Two classes need one separator; its negation serves the other class.
    let fitted: Vec<Vec<f64>> = if classes.len() == 2 {
        let y: Vec<f64> = labels.iter().map(|&l| if l == classes[1] { 1.0 } else { -1.0 }).collect();
        let w = fit_binary(&rows, &y, dim, c, &mut rng);
        vec![w.iter().map(|v| -v).collect(), w]
    } else {
        classes
            .iter()
            .map(|&k| {
                let y: Vec<f64> = labels.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
                fit_binary(&rows, &y, dim, c, &mut rng)
            })
            .collect()
    };
    let weights: Vec<Vec<f64>> = fitted
        .into_iter()
        .map(|mut w| {
            w.truncate(dim);
            w
        })
        .collect();

    let importances: Vec<f64> = (0..dim)
        .map(|j| weights.iter().map(|w| w[j].abs()).fold(0.0, f64::max))
        .collect();
    let mean = importances.iter().sum::<f64>() / dim as f64;
    let threshold = mean - TIE_SLACK * mean.abs().max(f64::MIN_POSITIVE);
    let mut keep = vec![true; matrix.n_cols()];
    for (j, &col) in candidates.iter().enumerate() {
        keep[col] = importances[j] >= threshold;
    }
    let kept_columns = (0..matrix.n_cols()).filter(|&j| keep[j]).collect();
    Ok(SelectionModel {
        classes,
        weights,
        c,
        candidates,
        importances,
        kept_columns,
        n_input_cols: matrix.n_cols(),
    })
}
