//! Comparison classifiers behind one predict contract.

mod forest;
mod logreg;
mod naive_bayes;
mod svm;

pub use forest::{gini, rf_fit, DecisionTree, ForestConfig, ForestModel, TreeNode};
pub use logreg::{logreg_fit, logreg_gradient, logreg_objective, LogRegConfig, LogRegModel};
pub use naive_bayes::{gnb_fit, GaussianNbModel};
pub use svm::{svm_fit, SvmConfig, SvmModel};

use nalgebra::DMatrix;

use crate::dataset::class_counts;
use crate::error::{Error, Result};
use crate::oselm::OselmModel;

/// A fitted binary classifier.
pub trait Classifier {
    /// Feature count seen at fit time.
    fn n_features(&self) -> usize;

    /// Labels for rows whose width has already been checked.
    fn decide(&self, x: &DMatrix<f64>) -> Vec<u8>;

    fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<u8>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.ncols(),
            });
        }
        Ok(self.decide(x))
    }
}

impl Classifier for OselmModel {
    fn n_features(&self) -> usize {
        self.inputs()
    }

    fn decide(&self, x: &DMatrix<f64>) -> Vec<u8> {
        self.predict_scores(x).expect("width checked").1
    }
}

pub(crate) fn check_training(x: &DMatrix<f64>, y: &[u8]) -> Result<()> {
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            actual: y.len(),
        });
    }
    crate::dataset::check_labels(y)?;
    let [clean, defective] = class_counts(y);
    if clean == 0 {
        return Err(Error::MissingClass(0));
    }
    if defective == 0 {
        return Err(Error::MissingClass(1));
    }
    Ok(())
}
