//! Hypothesis tests and projection math for comparing practice profiles
//! across domains.

mod chi2;
mod mwu;
mod report;
mod tsne;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chi2::{chi_square_2x2, ContingencyTable2x2};
pub use mwu::{mann_whitney_u, MannWhitney};
pub use report::{
    adoption_csv, domain_comparison_report, ownership_csv, refactoring_csv, tests_csv, tsne_csv, AdoptionRow,
    ComparisonReport, OwnershipRow, RefactoringRow, TestRow,
};
pub use tsne::{standardize, tsne_project, Embedding2D, Standardized, TsneConfig};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("2x2 table has a zero marginal")]
    DegenerateTable,
    #[error("sample is empty")]
    EmptySample,
    #[error("t-SNE needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("input contains NaN or infinite values")]
    NonFiniteInput,
    #[error("rows have inconsistent widths")]
    RaggedRows,
}

impl StatsError {
    pub fn code(&self) -> &'static str {
        match self {
            StatsError::DegenerateTable => "E-STATS-DEGENERATE-TABLE",
            StatsError::EmptySample => "E-STATS-EMPTY-SAMPLE",
            StatsError::TooFewPoints(_) => "E-STATS-TOO-FEW-POINTS",
            StatsError::NonFiniteInput => "E-STATS-NONFINITE",
            StatsError::RaggedRows => "E-STATS-RAGGED",
        }
    }
}

/// Effect-size bands with cut points 0.1, 0.3 and 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectLabel {
    Negligible,
    Small,
    Medium,
    Large,
}

impl EffectLabel {
    pub fn of(effect: f64) -> Self {
        let e = effect.abs();
        if e < 0.1 {
            EffectLabel::Negligible
        } else if e < 0.3 {
            EffectLabel::Small
        } else if e < 0.5 {
            EffectLabel::Medium
        } else {
            EffectLabel::Large
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EffectLabel::Negligible => "negligible",
            EffectLabel::Small => "small",
            EffectLabel::Medium => "medium",
            EffectLabel::Large => "large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    pub statistic: f64,
    pub p_value: f64,
    pub effect_size: f64,
    pub effect_label: EffectLabel,
}

/// 1-based ranks with ties sharing the mean of the ranks they span.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Median of a sample; the mean of the middle pair for even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kim_bands() {
        assert_eq!(EffectLabel::of(0.0999), EffectLabel::Negligible);
        assert_eq!(EffectLabel::of(0.1), EffectLabel::Small);
        assert_eq!(EffectLabel::of(-0.3), EffectLabel::Medium);
        assert_eq!(EffectLabel::of(0.5), EffectLabel::Large);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(mid_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
