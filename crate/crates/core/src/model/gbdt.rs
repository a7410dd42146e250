use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, GrowParams, Scratch, TrainData, Tree};
use super::ModelError;
use crate::corpus::DomainLabel;
use crate::features::{FeatureColumnMeta, FeatureGroup, FeatureMatrix};

const MIN_HESSIAN: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub num_rounds: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub l2_leaf_penalty: f64,
    pub feature_subsample: f64,
    pub seed: u64,
    /// Restrict thresholds to this many quantile bins per column; exact
    /// split search when `None`.
    #[serde(default)]
    pub histogram_bins: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_rounds: 100,
            learning_rate: 0.1,
            max_leaves: 31,
            min_samples_leaf: 5,
            l2_leaf_penalty: 1.0,
            feature_subsample: 1.0,
            seed: 0,
            histogram_bins: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |what: &str| Err(ModelError::InvalidConfig(what.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if self.max_leaves < 2 {
            return bad("max_leaves must be at least 2");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        if !(self.l2_leaf_penalty >= 0.0 && self.l2_leaf_penalty.is_finite()) {
            return bad("l2_leaf_penalty must be nonnegative");
        }
        if !(self.feature_subsample > 0.0 && self.feature_subsample <= 1.0) {
            return bad("feature_subsample must lie in (0, 1]");
        }
        if self.histogram_bins.is_some_and(|b| b < 2) {
            return bad("histogram_bins must be at least 2");
        }
        Ok(())
    }
}

/// Multiclass boosted trees. `trees[r * K + k]` is round `r`'s tree for
/// class `classes[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub classes: Vec<DomainLabel>,
    pub trees: Vec<Tree>,
    pub columns: Vec<FeatureColumnMeta>,
    pub base_scores: Vec<f64>,
    pub config: TrainConfig,
}

fn softmax_in_place(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Mean softmax cross-entropy of raw scores against class indices.
fn log_loss(scores: &[f64], y: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    let mut p = vec![0.0; k];
    for (i, &yi) in y.iter().enumerate() {
        p.copy_from_slice(&scores[i * k..(i + 1) * k]);
        softmax_in_place(&mut p);
        total -= p[yi].max(f64::MIN_POSITIVE).ln();
    }
    total / y.len() as f64
}

/// Trains a model and returns the training loss before the first round and
/// after every round.
pub fn train_traced(matrix: &FeatureMatrix, config: &TrainConfig) -> Result<(GbdtModel, Vec<f64>), ModelError> {
    config.validate()?;
    let labels = matrix.require_labels()?;
    if matrix.n_rows() == 0 {
        return Err(ModelError::DegenerateLabels);
    }
    if matrix.data().iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFiniteInput);
    }
    let mut counts: BTreeMap<DomainLabel, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    if counts.len() < 2 {
        return Err(ModelError::DegenerateLabels);
    }
    let classes: Vec<DomainLabel> = counts.keys().copied().collect();
    let k = classes.len();
    let n = matrix.n_rows();
    let d = matrix.n_cols();
    let base_scores: Vec<f64> = classes.iter().map(|c| (counts[c] as f64 / n as f64).ln()).collect();
    let y: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("class present"))
        .collect();

    let data = TrainData::new(matrix.data(), n, d, config.histogram_bins);
    let params = GrowParams {
        max_leaves: config.max_leaves,
        min_samples_leaf: config.min_samples_leaf,
        l2: config.l2_leaf_penalty,
        shrinkage: config.learning_rate,
    };
    let mut scores: Vec<f64> = (0..n).flat_map(|_| base_scores.iter().copied()).collect();
    let mut history = vec![log_loss(&scores, &y, k)];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut scratch = Scratch::new(d);
    let mut trees = Vec::with_capacity(config.num_rounds * k);
    let n_sub = ((config.feature_subsample * d as f64).ceil() as usize).clamp(d.min(1), d);
    let mut col_order: Vec<usize> = (0..d).collect();
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut probs = vec![0.0; n * k];
    for _ in 0..config.num_rounds {
        probs.copy_from_slice(&scores);
        for row in probs.chunks_mut(k) {
            softmax_in_place(row);
        }
        let mut round_trees = Vec::with_capacity(k);
        for class in 0..k {
            for i in 0..n {
                let p = probs[i * k + class];
                grad[i] = p - if y[i] == class { 1.0 } else { 0.0 };
                hess[i] = (p * (1.0 - p)).max(MIN_HESSIAN);
            }
            let mut allowed = vec![true; d];
            if n_sub < d {
                col_order.shuffle(&mut rng);
                allowed.iter_mut().for_each(|a| *a = false);
                for &c in &col_order[..n_sub] {
                    allowed[c] = true;
                }
            }
            round_trees.push(grow_tree(&data, (0..n).collect(), &grad, &hess, &allowed, &params, &mut scratch));
        }
        for i in 0..n {
            let row = matrix.row(i);
            for (class, t) in round_trees.iter().enumerate() {
                scores[i * k + class] += t.predict(row);
            }
        }
        trees.extend(round_trees);
        history.push(log_loss(&scores, &y, k));
    }
    let model = GbdtModel {
        classes,
        trees,
        columns: matrix.columns().to_vec(),
        base_scores,
        config: config.clone(),
    };
    Ok((model, history))
}

pub fn train(matrix: &FeatureMatrix, config: &TrainConfig) -> Result<GbdtModel, ModelError> {
    train_traced(matrix, config).map(|(m, _)| m)
}

impl GbdtModel {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_rounds(&self) -> usize {
        self.trees.len() / self.classes.len().max(1)
    }

    fn check_width(&self, width: usize) -> Result<(), ModelError> {
        if width != self.columns.len() {
            return Err(ModelError::WidthMismatch {
                expected: self.columns.len(),
                found: width,
            });
        }
        Ok(())
    }

    /// Accumulated class scores for one row.
    pub fn raw_scores(&self, row: &[f64]) -> Vec<f64> {
        let k = self.classes.len();
        let mut s = self.base_scores.clone();
        for (i, t) in self.trees.iter().enumerate() {
            s[i % k] += t.predict(row);
        }
        s
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_width(row.len())?;
        let mut s = self.raw_scores(row);
        softmax_in_place(&mut s);
        Ok(s)
    }

    /// One probability row per matrix row, columns ordered as `classes`.
    pub fn predict_proba(&self, matrix: &FeatureMatrix) -> Result<Vec<Vec<f64>>, ModelError> {
        self.check_width(matrix.n_cols())?;
        matrix.rows().map(|r| self.predict_proba_row(r)).collect()
    }

    /// Arg-max class per row; the first class wins ties.
    pub fn predict(&self, matrix: &FeatureMatrix) -> Result<Vec<DomainLabel>, ModelError> {
        Ok(self
            .predict_proba(matrix)?
            .iter()
            .map(|p| self.classes[argmax(p)])
            .collect())
    }

    /// Number of internal nodes splitting on each column.
    pub fn feature_importance(&self) -> Vec<usize> {
        let mut counts = vec![0; self.columns.len()];
        for t in &self.trees {
            for c in t.split_columns() {
                counts[c] += 1;
            }
        }
        counts
    }

    /// Share of all splits per feature group, in percent. All zeros when the
    /// model never splits.
    pub fn group_importance(&self) -> BTreeMap<FeatureGroup, f64> {
        let counts = self.feature_importance();
        let total: usize = counts.iter().sum();
        let mut out: BTreeMap<FeatureGroup, f64> = FeatureGroup::ALL.iter().map(|&g| (g, 0.0)).collect();
        if total == 0 {
            return out;
        }
        for (c, n) in self.columns.iter().zip(&counts) {
            *out.get_mut(&c.group).expect("all groups present") += *n as f64;
        }
        for v in out.values_mut() {
            *v = *v / total as f64 * 100.0;
        }
        out
    }
}

pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DomainLabel::*;
    use crate::features::FeatureSource;
    use crate::model::tree::Node;
    use proptest::prelude::*;

    fn separable() -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 / 20.0]).collect();
        let labels = (0..20).map(|i| if i < 10 { Documentation } else { SoftwareTools }).collect();
        FeatureMatrix::from_plain_rows(&rows, Some(labels)).unwrap()
    }

    fn xor() -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        // uneven cluster sizes; a perfectly balanced XOR offers no first split with positive gain
        for ((cx, cy), n) in [((0.0, 0.0), 8), ((0.0, 1.0), 4), ((1.0, 0.0), 6), ((1.0, 1.0), 8)] {
            for j in 0..n {
                let jitter = j as f64 * 0.01;
                rows.push(vec![cx + jitter, cy - jitter]);
                labels.push(if (cx == 1.0) ^ (cy == 1.0) { Documentation } else { SoftwareTools });
            }
        }
        FeatureMatrix::from_plain_rows(&rows, Some(labels)).unwrap()
    }

    fn accuracy(model: &GbdtModel, m: &FeatureMatrix) -> f64 {
        let pred = model.predict(m).unwrap();
        let truth = m.labels().unwrap();
        pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
    }

    #[test]
    fn single_class_is_degenerate() {
        let m = FeatureMatrix::from_plain_rows(&[vec![1.0], vec![2.0]], Some(vec![Documentation; 2])).unwrap();
        assert!(matches!(train(&m, &TrainConfig::default()), Err(ModelError::DegenerateLabels)));
    }

    #[test]
    fn separable_reaches_full_accuracy() {
        let m = separable();
        let cfg = TrainConfig {
            num_rounds: 20,
            min_samples_leaf: 1,
            ..TrainConfig::default()
        };
        let (model, loss) = train_traced(&m, &cfg).unwrap();
        assert_eq!(accuracy(&model, &m), 1.0);
        assert!(loss.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert_eq!(model.trees.len(), 20 * 2);
    }

    #[test]
    fn xor_reaches_full_accuracy() {
        let m = xor();
        let cfg = TrainConfig {
            num_rounds: 50,
            max_leaves: 4,
            min_samples_leaf: 1,
            ..TrainConfig::default()
        };
        let (model, loss) = train_traced(&m, &cfg).unwrap();
        assert_eq!(accuracy(&model, &m), 1.0);
        assert!(loss.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        for t in &model.trees {
            assert!(t.n_leaves() <= 4);
            for n in &t.nodes {
                if let Node::Split { column, .. } = n {
                    assert!(*column < 2);
                }
            }
        }
    }

    #[test]
    fn zero_rounds_uniform_prior_is_uniform() {
        let m = separable();
        let model = train(&m, &TrainConfig { num_rounds: 0, ..TrainConfig::default() }).unwrap();
        for p in model.predict_proba(&m).unwrap() {
            assert!(p.iter().all(|&v| (v - 0.5).abs() < 1e-15));
        }
    }

    #[test]
    fn deterministic_bytes() {
        let m = xor();
        let cfg = TrainConfig {
            feature_subsample: 0.5,
            seed: 3,
            ..TrainConfig::default()
        };
        let a = serde_json::to_string(&train(&m, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&train(&m, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn importance_counts_splits() {
        let mut rows = Vec::new();
        for i in 0..20 {
            rows.push(vec![i as f64, 0.0]);
        }
        let labels = (0..20).map(|i| if i < 10 { Documentation } else { SoftwareTools }).collect();
        let cols = vec![
            FeatureColumnMeta::new("readme:a", FeatureGroup::Textual, FeatureSource::Readme),
            FeatureColumnMeta::new("stars", FeatureGroup::Numerical, FeatureSource::Stars),
        ];
        let m = FeatureMatrix::from_rows(&rows, cols, Some(labels)).unwrap();
        let model = train(&m, &TrainConfig::default()).unwrap();
        let imp = model.feature_importance();
        assert!(imp[0] > 0);
        assert_eq!(imp[1], 0);
        let g = model.group_importance();
        assert!((g.values().sum::<f64>() - 100.0).abs() < 0.01);
        assert_eq!(g[&FeatureGroup::Textual], 100.0);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let model = train(&separable(), &TrainConfig::default()).unwrap();
        assert!(matches!(model.predict_proba_row(&[1.0, 2.0]), Err(ModelError::WidthMismatch { .. })));
    }

    #[test]
    fn invalid_config_rejected() {
        let m = separable();
        for cfg in [
            TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
            TrainConfig { max_leaves: 1, ..TrainConfig::default() },
            TrainConfig { feature_subsample: 1.5, ..TrainConfig::default() },
        ] {
            assert!(matches!(train(&m, &cfg), Err(ModelError::InvalidConfig(_))));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn probabilities_sum_to_one(rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 10..30)) {
            let labels: Vec<_> = (0..rows.len()).map(|i| [Documentation, SoftwareTools, SystemSoftware][i % 3]).collect();
            let m = FeatureMatrix::from_plain_rows(&rows, Some(labels)).unwrap();
            let model = train(&m, &TrainConfig { num_rounds: 10, min_samples_leaf: 1, ..TrainConfig::default() }).unwrap();
            for p in model.predict_proba(&m).unwrap() {
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
            }
        }

        #[test]
        fn argmax_invariant_under_score_shift(scores in prop::collection::vec(-40i32..40, 2..6), shift in -100i32..100) {
            let mut a: Vec<f64> = scores.iter().map(|&s| s as f64 / 4.0).collect();
            let mut b: Vec<f64> = scores.iter().map(|&s| (s + 4 * shift) as f64 / 4.0).collect();
            softmax_in_place(&mut a);
            softmax_in_place(&mut b);
            prop_assert_eq!(argmax(&a), argmax(&b));
        }
    }
}
