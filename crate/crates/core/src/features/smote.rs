use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{FeatureMatrix, FeaturesError};
use crate::corpus::DomainLabel;

/// Where a synthetic row came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    /// Row index in the output matrix.
    pub row: usize,
    /// Input row the sample was interpolated from.
    pub base: usize,
    /// Same-class neighbour it was interpolated towards.
    pub neighbor: usize,
    pub u: f64,
}

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    pub matrix: FeatureMatrix,
    pub synthetic: Vec<SyntheticOrigin>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest same-class rows of `members[pos]`, ties by row index.
fn neighbours(matrix: &FeatureMatrix, members: &[usize], pos: usize, k: usize) -> Vec<usize> {
    let base = matrix.row(members[pos]);
    let mut d: Vec<(f64, usize)> = members
        .iter()
        .enumerate()
        .filter(|&(p, _)| p != pos)
        .map(|(_, &i)| (sq_dist(base, matrix.row(i)), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.truncate(k);
    d.into_iter().map(|(_, i)| i).collect()
}

/// Oversamples every class up to the largest class count. Original rows come
/// first, unchanged; synthetic rows follow grouped by class in label order.
pub fn smote_with_provenance(matrix: &FeatureMatrix, k: usize, seed: u64) -> Result<SmoteOutput, FeaturesError> {
    let labels = matrix.require_labels()?;
    let mut by_class: BTreeMap<DomainLabel, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let target = by_class.values().map(Vec::len).max().unwrap_or(0);
    for (&label, members) in &by_class {
        if members.len() < target && members.len() < 2 {
            return Err(FeaturesError::TooFewSamples(label));
        }
    }

    let width = matrix.n_cols();
    let mut data = matrix.data().to_vec();
    let mut out_labels = labels.to_vec();
    let mut synthetic = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (&label, members) in &by_class {
        let need = target - members.len();
        if need == 0 {
            continue;
        }
        let k_eff = k.max(1).min(members.len() - 1);
        let used = need.min(members.len());
        let knn: Vec<Vec<usize>> = (0..used)
            .into_par_iter()
            .map(|p| neighbours(matrix, members, p, k_eff))
            .collect();
        for s in 0..need {
            let pos = s % members.len();
            let base = members[pos];
            let neighbor = knn[pos][rng.random_range(0..knn[pos].len())];
            let u: f64 = rng.random();
            let x = matrix.row(base);
            let nn = matrix.row(neighbor);
            data.extend(x.iter().zip(nn).map(|(a, b)| a + u * (b - a)));
            out_labels.push(label);
            synthetic.push(SyntheticOrigin {
                row: out_labels.len() - 1,
                base,
                neighbor,
                u,
            });
        }
    }
    let n = out_labels.len();
    debug_assert_eq!(data.len(), n * width);
    let matrix = FeatureMatrix::from_flat(data, n, matrix.columns().to_vec(), Some(out_labels))?;
    Ok(SmoteOutput { matrix, synthetic })
}

pub fn smote(matrix: &FeatureMatrix, k: usize, seed: u64) -> Result<FeatureMatrix, FeaturesError> {
    smote_with_provenance(matrix, k, seed).map(|o| o.matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DomainLabel::*;
    use proptest::prelude::*;

    fn counts(m: &FeatureMatrix) -> BTreeMap<DomainLabel, usize> {
        let mut c = BTreeMap::new();
        for &l in m.labels().unwrap() {
            *c.entry(l).or_insert(0) += 1;
        }
        c
    }

    fn grid(sizes: &[(DomainLabel, usize)], width: usize) -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for &(l, n) in sizes {
            for i in 0..n {
                rows.push((0..width).map(|j| ((i * 7 + j * 3) % 11) as f64 + l as usize as f64).collect());
                labels.push(l);
            }
        }
        FeatureMatrix::from_plain_rows(&rows, Some(labels)).unwrap()
    }

    #[test]
    fn classes_balanced_to_majority() {
        let m = grid(&[(Documentation, 10), (SoftwareTools, 3)], 2);
        let out = smote(&m, 5, 1).unwrap();
        assert!(counts(&out).values().all(|&c| c == 10));
    }

    #[test]
    fn originals_retained_verbatim() {
        let m = grid(&[(Documentation, 6), (SoftwareTools, 2), (WebLibsFrameworks, 4)], 3);
        let out = smote(&m, 5, 2).unwrap();
        for i in 0..m.n_rows() {
            assert_eq!(out.row(i), m.row(i));
            assert_eq!(out.labels().unwrap()[i], m.labels().unwrap()[i]);
        }
    }

    #[test]
    fn singleton_minority_fails() {
        let m = grid(&[(Documentation, 4), (SoftwareTools, 1)], 2);
        assert!(matches!(smote(&m, 5, 0), Err(FeaturesError::TooFewSamples(SoftwareTools))));
    }

    #[test]
    fn deterministic_given_seed() {
        let m = grid(&[(Documentation, 9), (SoftwareTools, 4)], 3);
        assert_eq!(smote(&m, 5, 42).unwrap(), smote(&m, 5, 42).unwrap());
    }

    #[test]
    fn neighbours_are_nearest_same_class() {
        let m = grid(&[(Documentation, 12), (SoftwareTools, 7)], 2);
        let out = smote_with_provenance(&m, 3, 5).unwrap();
        let labels = m.labels().unwrap();
        for o in &out.synthetic {
            assert_eq!(labels[o.base], labels[o.neighbor]);
            // brute force: the neighbour is within the 3 smallest distances
            let d = sq_dist(m.row(o.base), m.row(o.neighbor));
            let closer = (0..m.n_rows())
                .filter(|&i| i != o.base && labels[i] == labels[o.base])
                .filter(|&i| sq_dist(m.row(o.base), m.row(i)) < d)
                .count();
            assert!(closer < 3);
        }
    }

    proptest! {
        #[test]
        fn synthetic_rows_lie_on_segments(
            n_major in 3usize..15,
            n_minor in 2usize..6,
            seed in any::<u64>(),
        ) {
            let m = grid(&[(Documentation, n_major), (SystemSoftware, n_minor)], 3);
            let out = smote_with_provenance(&m, 5, seed).unwrap();
            prop_assert!(counts(&out.matrix).values().all(|&c| c == n_major.max(n_minor)));
            for o in &out.synthetic {
                prop_assert!((0.0..1.0).contains(&o.u));
                let s = out.matrix.row(o.row);
                let (x, nn) = (m.row(o.base), m.row(o.neighbor));
                for i in 0..s.len() {
                    prop_assert!(x[i].min(nn[i]) <= s[i] && s[i] <= x[i].max(nn[i]));
                }
            }
        }
    }
}
