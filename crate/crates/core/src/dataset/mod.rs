//! Labelled defect datasets: ingestion, fold splitting and feature preprocessing.

mod arff;
mod delimited;
mod folds;
mod preprocess;

pub use arff::parse_arff;
pub use delimited::{parse_csv, write_csv};
pub use folds::{stratified_kfold, FoldAssignment};
pub use preprocess::Preprocessor;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Class label of a defective module (the minority, positive class).
pub const DEFECTIVE: u8 = 1;
/// Class label of a clean module.
pub const CLEAN: u8 = 0;

/// Case-insensitive set of class tokens that denote a defective module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectiveTokens(Vec<String>);

impl DefectiveTokens {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(tokens.into_iter().map(Into::into).collect())
    }

    pub fn matches(&self, token: &str) -> bool {
        self.0.iter().any(|t| t.eq_ignore_ascii_case(token))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }
}

impl Default for DefectiveTokens {
    fn default() -> Self {
        Self::new(["Y", "true", "1"])
    }
}

/// A numeric feature matrix with binary defect labels.
///
/// Rows are modules, columns are software metrics. Construction validates
/// that every value is finite, every label is 0 or 1, and that there are at
/// least two rows and one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    feature_names: Vec<String>,
    features: DMatrix<f64>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        features: DMatrix<f64>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let (n, d) = features.shape();
        if d == 0 {
            return Err(Error::InvalidData("dataset has no feature columns".into()));
        }
        if n < 2 {
            return Err(Error::InvalidData(format!(
                "dataset needs at least 2 rows, got {n}"
            )));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: labels.len(),
            });
        }
        if feature_names.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: feature_names.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite feature value at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        check_labels(&labels)?;
        Ok(Self {
            name: name.into(),
            feature_names,
            features,
            labels,
        })
    }

    /// Builds a dataset with generated feature names `f0, f1, ...`.
    pub fn from_matrix(
        name: impl Into<String>,
        features: DMatrix<f64>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let names = (0..features.ncols()).map(|j| format!("f{j}")).collect();
        Self::new(name, names, features, labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Counts of `[clean, defective]` rows.
    pub fn class_counts(&self) -> [usize; 2] {
        class_counts(&self.labels)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let features = select_rows(&self.features, indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(
            self.name.clone(),
            self.feature_names.clone(),
            features,
            labels,
        )
    }

    pub fn into_parts(self) -> (String, Vec<String>, DMatrix<f64>, Vec<u8>) {
        (self.name, self.feature_names, self.features, self.labels)
    }
}

pub(crate) fn check_labels(labels: &[u8]) -> Result<()> {
    match labels.iter().position(|&l| l > 1) {
        Some(i) => Err(Error::InvalidData(format!(
            "label at row {i} is {}, expected 0 or 1",
            labels[i]
        ))),
        None => Ok(()),
    }
}

/// Counts of `[label 0, label 1]`.
pub fn class_counts(labels: &[u8]) -> [usize; 2] {
    let ones = labels.iter().filter(|&&l| l == DEFECTIVE).count();
    [labels.len() - ones, ones]
}

/// Copies the rows at `indices` into a new matrix.
pub fn select_rows(x: &DMatrix<f64>, indices: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(indices.len(), x.ncols(), |i, j| x[(indices[i], j)])
}
