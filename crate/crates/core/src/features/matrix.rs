use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{FeatureColumnMeta, FeatureGroup, FeatureSource, FeaturesError};
use crate::corpus::{DomainLabel, RepoRecord};

/// Dense row-major matrix with per-column metadata and optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n_rows: usize,
    columns: Vec<FeatureColumnMeta>,
    labels: Option<Vec<DomainLabel>>,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major data, validating shape, finiteness,
    /// column-name uniqueness and label count.
    pub fn from_flat(
        data: Vec<f64>,
        n_rows: usize,
        columns: Vec<FeatureColumnMeta>,
        labels: Option<Vec<DomainLabel>>,
    ) -> Result<Self, FeaturesError> {
        let width = columns.len();
        if data.len() != n_rows * width {
            return Err(FeaturesError::ColumnMismatch {
                expected: n_rows * width,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(FeaturesError::NonFinite {
                row: pos / width.max(1),
                col: pos % width.max(1),
            });
        }
        let mut seen = HashSet::with_capacity(width);
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(FeaturesError::DuplicateColumn(c.name.clone()));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n_rows {
                return Err(FeaturesError::LabelCount {
                    labels: l.len(),
                    rows: n_rows,
                });
            }
        }
        Ok(Self {
            data,
            n_rows,
            columns,
            labels,
        })
    }

    pub fn from_rows(
        rows: &[Vec<f64>],
        columns: Vec<FeatureColumnMeta>,
        labels: Option<Vec<DomainLabel>>,
    ) -> Result<Self, FeaturesError> {
        let width = columns.len();
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(FeaturesError::ColumnMismatch {
                expected: width,
                found: r.len(),
            });
        }
        let data = rows.iter().flatten().copied().collect();
        Self::from_flat(data, rows.len(), columns, labels)
    }

    /// A matrix of unnamed numerical columns `x0, x1, ...`; handy for
    /// synthetic data.
    pub fn from_plain_rows(rows: &[Vec<f64>], labels: Option<Vec<DomainLabel>>) -> Result<Self, FeaturesError> {
        let width = rows.first().map_or(0, Vec::len);
        let columns = (0..width)
            .map(|j| FeatureColumnMeta::new(format!("x{j}"), FeatureGroup::Numerical, FeatureSource::Stars))
            .collect();
        Self::from_rows(rows, columns, labels)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.n_cols();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows).map(|i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols() + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn columns(&self) -> &[FeatureColumnMeta] {
        &self.columns
    }

    pub fn labels(&self) -> Option<&[DomainLabel]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self) -> Result<&[DomainLabel], FeaturesError> {
        self.labels().ok_or(FeaturesError::Unlabelled)
    }

    pub fn with_labels(mut self, labels: Option<Vec<DomainLabel>>) -> Result<Self, FeaturesError> {
        if let Some(l) = &labels {
            if l.len() != self.n_rows {
                return Err(FeaturesError::LabelCount {
                    labels: l.len(),
                    rows: self.n_rows,
                });
            }
        }
        self.labels = labels;
        Ok(self)
    }

    /// Projection onto the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(self.n_rows * cols.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&j| row[j]));
        }
        FeatureMatrix {
            data,
            n_rows: self.n_rows,
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols());
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            data,
            n_rows: rows.len(),
            columns: self.columns.clone(),
            labels: self.labels.as_ref().map(|l| rows.iter().map(|&i| l[i]).collect()),
        }
    }

    /// Indices of the columns in `group`.
    pub fn group_columns(&self, group: FeatureGroup) -> Vec<usize> {
        (0..self.n_cols()).filter(|&j| self.columns[j].group == group).collect()
    }

    /// Horizontal concatenation. Labels must agree where present.
    pub fn hconcat(parts: &[&FeatureMatrix]) -> Result<FeatureMatrix, FeaturesError> {
        let Some(first) = parts.first() else {
            return FeatureMatrix::from_flat(Vec::new(), 0, Vec::new(), None);
        };
        let n = first.n_rows;
        let mut labels: Option<Vec<DomainLabel>> = None;
        for p in parts {
            if p.n_rows != n {
                return Err(FeaturesError::RowMismatch {
                    left: n,
                    right: p.n_rows,
                });
            }
            if let Some(l) = &p.labels {
                match &labels {
                    Some(existing) if existing != l => {
                        return Err(FeaturesError::LabelCount {
                            labels: l.len(),
                            rows: n,
                        })
                    }
                    _ => labels = Some(l.clone()),
                }
            }
        }
        let columns: Vec<_> = parts.iter().flat_map(|p| p.columns.iter().cloned()).collect();
        let mut data = Vec::with_capacity(n * columns.len());
        for i in 0..n {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        FeatureMatrix::from_flat(data, n, columns, labels)
    }
}

/// Raw count columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericalSource {
    Releases,
    Stars,
    Forks,
}

impl NumericalSource {
    pub const ALL: [NumericalSource; 3] = [NumericalSource::Releases, NumericalSource::Stars, NumericalSource::Forks];

    fn meta(self) -> FeatureColumnMeta {
        let (name, source) = match self {
            NumericalSource::Releases => ("releases", FeatureSource::Releases),
            NumericalSource::Stars => ("stars", FeatureSource::Stars),
            NumericalSource::Forks => ("forks", FeatureSource::Forks),
        };
        FeatureColumnMeta::new(name, FeatureGroup::Numerical, source)
    }

    fn value(self, r: &RepoRecord) -> f64 {
        match self {
            NumericalSource::Releases => r.releases as f64,
            NumericalSource::Stars => r.stars as f64,
            NumericalSource::Forks => r.forks as f64,
        }
    }
}

/// Unscaled count columns for the requested sources.
pub fn numerical_features(records: &[RepoRecord], sources: &[NumericalSource]) -> FeatureMatrix {
    let data = records
        .iter()
        .flat_map(|r| sources.iter().map(move |s| s.value(r)))
        .collect();
    FeatureMatrix::from_flat(data, records.len(), sources.iter().map(|s| s.meta()).collect(), None)
        .expect("count columns are finite and uniquely named")
}

/// Concatenates text, categorical and numerical blocks; any may be absent.
pub fn assemble(
    text: Option<&FeatureMatrix>,
    categorical: Option<&FeatureMatrix>,
    numerical: Option<&FeatureMatrix>,
) -> Result<FeatureMatrix, FeaturesError> {
    let parts: Vec<&FeatureMatrix> = [text, categorical, numerical].into_iter().flatten().collect();
    FeatureMatrix::hconcat(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(n_rows: usize, names: &[&str], group: FeatureGroup) -> FeatureMatrix {
        let columns = names
            .iter()
            .map(|n| FeatureColumnMeta::new(*n, group, FeatureSource::Readme))
            .collect();
        let data = (0..n_rows * names.len()).map(|v| v as f64).collect();
        FeatureMatrix::from_flat(data, n_rows, columns, None).unwrap()
    }

    #[test]
    fn assemble_widths_and_preservation() {
        let t = block(2, &["t1", "t2", "t3"], FeatureGroup::Textual);
        let c = block(2, &["c1", "c2"], FeatureGroup::Categorical);
        let n = block(2, &["releases", "stars", "forks"], FeatureGroup::Numerical);
        let m = assemble(Some(&t), Some(&c), Some(&n)).unwrap();
        assert_eq!(m.n_cols(), 8);
        for i in 0..2 {
            assert_eq!(&m.row(i)[..3], t.row(i));
            assert_eq!(&m.row(i)[3..5], c.row(i));
            assert_eq!(&m.row(i)[5..], n.row(i));
        }
        assert_eq!(m.columns()[4].group, FeatureGroup::Categorical);
    }

    #[test]
    fn assemble_rejects_row_mismatch() {
        let t = block(2, &["t1"], FeatureGroup::Textual);
        let c = block(3, &["c1"], FeatureGroup::Categorical);
        assert!(matches!(assemble(Some(&t), Some(&c), None), Err(FeaturesError::RowMismatch { .. })));
    }

    #[test]
    fn validation() {
        let cols = vec![
            FeatureColumnMeta::new("a", FeatureGroup::Numerical, FeatureSource::Stars),
            FeatureColumnMeta::new("a", FeatureGroup::Numerical, FeatureSource::Stars),
        ];
        assert!(matches!(
            FeatureMatrix::from_flat(vec![0.0, 1.0], 1, cols, None),
            Err(FeaturesError::DuplicateColumn(_))
        ));
        assert!(matches!(
            FeatureMatrix::from_plain_rows(&[vec![f64::NAN]], None),
            Err(FeaturesError::NonFinite { .. })
        ));
        assert!(matches!(
            FeatureMatrix::from_plain_rows(&[vec![1.0]], Some(vec![])),
            Err(FeaturesError::LabelCount { .. })
        ));
    }

    #[test]
    fn numerical_columns_are_raw_counts() {
        let mut r = crate::corpus::test_support::record("x", None);
        r.stars = 2866;
        r.forks = 460;
        r.releases = 3;
        let m = numerical_features(&[r], &NumericalSource::ALL);
        assert_eq!(m.row(0), &[3.0, 2866.0, 460.0]);
        assert!(m.columns().iter().all(|c| c.group == FeatureGroup::Numerical));
    }
}
