use std::collections::BTreeMap;
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, Dataset};

fn group_by_label<L: Ord + Copy>(labels: &[L]) -> BTreeMap<L, Vec<usize>> {
    let mut groups: BTreeMap<L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        groups.entry(*l).or_default().push(i);
    }
    groups
}

/// Splits a labelled dataset into (train, test) with per-label stratification.
///
/// Each label contributes `round(n * test_fraction)` test records, clamped
/// so that a label with at least two records keeps one record on each side.
/// Record order is preserved inside both parts.
pub fn stratified_split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), CorpusError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(test_fraction));
    }
    if dataset.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    let labels = dataset.labels()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; labels.len()];
    for (_, mut idx) in group_by_label(&labels) {
        let n = idx.len();
        let mut n_test = (n as f64 * test_fraction).round() as usize;
        if n >= 2 {
            n_test = n_test.clamp(1, n - 1);
        }
        idx.shuffle(&mut rng);
        for &i in &idx[..n_test] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| is_test[i]);
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Assigns each sample to one of `folds` stratified folds.
///
/// Within each label the samples are shuffled and dealt round-robin, with
/// the starting fold rotating between labels so fold sizes stay balanced.
pub fn stratified_folds<L: Ord + Copy + Hash>(labels: &[L], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    let mut offset = 0usize;
    for (_, mut idx) in group_by_label(labels) {
        idx.shuffle(&mut rng);
        for (j, &i) in idx.iter().enumerate() {
            assignment[i] = (offset + j) % folds.max(1);
        }
        offset += idx.len();
    }
    assignment
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::test_support::dataset_with_counts;
    use crate::corpus::DomainLabel::{self, *};
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn exact_stratification_two_classes() {
        let ds = dataset_with_counts(&[(Documentation, 50), (SoftwareTools, 50)]);
        let (train, test) = stratified_split(&ds, 0.1, 7).unwrap();
        assert_eq!(test.len(), 10);
        assert_eq!(test.class_counts()[&Documentation], 5);
        assert_eq!(test.class_counts()[&SoftwareTools], 5);
        assert_eq!(train.len(), 90);
    }

    #[test]
    fn published_distribution_gives_495_test_records() {
        let ds = dataset_with_counts(&[
            (WebLibsFrameworks, 1522),
            (NonWebLibsFrameworks, 1429),
            (SoftwareTools, 963),
            (ApplicationSoftware, 428),
            (Documentation, 427),
            (SystemSoftware, 179),
        ]);
        let (_, test) = stratified_split(&ds, 0.1, 1).unwrap();
        assert_eq!(test.len(), 495);
        // Row sums of the published confusion matrix.
        let expected = [
            (ApplicationSoftware, 43),
            (Documentation, 43),
            (NonWebLibsFrameworks, 143),
            (SoftwareTools, 96),
            (SystemSoftware, 18),
            (WebLibsFrameworks, 152),
        ];
        for (label, n) in expected {
            assert_eq!(test.class_counts()[&label], n, "{label}");
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = dataset_with_counts(&[(Documentation, 20), (SoftwareTools, 13)]);
        let a = stratified_split(&ds, 0.3, 42).unwrap();
        let b = stratified_split(&ds, 0.3, 42).unwrap();
        assert_eq!(a, b);
        let c = stratified_split(&ds, 0.3, 43).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            stratified_split(&Dataset::default(), 0.1, 0),
            Err(CorpusError::EmptyDataset)
        ));
        let ds = dataset_with_counts(&[(Documentation, 2)]);
        assert!(matches!(stratified_split(&ds, 1.0, 0), Err(CorpusError::InvalidFraction(_))));
        let mut unl = ds.clone();
        unl.records[0].label = None;
        assert!(matches!(stratified_split(&unl, 0.5, 0), Err(CorpusError::Unlabelled(_))));
    }

    #[test]
    fn folds_are_balanced() {
        let labels: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let f = stratified_folds(&labels, 2, 3);
        assert_eq!(f.iter().filter(|&&x| x == 0).count(), 5);
        assert_eq!(f, stratified_folds(&labels, 2, 3));
    }

    proptest! {
        #[test]
        fn split_partitions_and_stratifies(
            counts in prop::collection::vec(1usize..40, 1..5),
            frac in 0.05f64..0.95,
            seed in any::<u64>(),
        ) {
            let labels = [Documentation, SoftwareTools, WebLibsFrameworks, NonWebLibsFrameworks, ApplicationSoftware];
            let shape: Vec<(DomainLabel, usize)> = counts.iter().enumerate().map(|(i, &n)| (labels[i], n)).collect();
            let ds = dataset_with_counts(&shape);
            let (train, test) = stratified_split(&ds, frac, seed).unwrap();
            prop_assert_eq!(train.len() + test.len(), ds.len());
            let tr: HashSet<_> = train.records.iter().map(|r| r.repo.clone()).collect();
            let te: HashSet<_> = test.records.iter().map(|r| r.repo.clone()).collect();
            prop_assert!(tr.is_disjoint(&te));
            for &(label, n) in &shape {
                let t = test.class_counts().get(&label).copied().unwrap_or(0) as f64;
                prop_assert!((t - n as f64 * frac).abs() <= 1.0, "{} {} {}", label, t, n);
                let tr_n = train.class_counts().get(&label).copied().unwrap_or(0) as f64;
                prop_assert!((tr_n - n as f64 * (1.0 - frac)).abs() <= 1.0);
                if n >= 2 {
                    prop_assert!(tr_n >= 1.0 && t >= 1.0);
                }
            }
        }
    }
}
