//! Imbalanced defect-prediction toolkit.
//!
//! - [`dataset`]: ARFF/CSV ingestion, stratified folds, standardise+PCA.
//! - [`resampling`]: KMFOS cluster-pair oversampling with CLNI filtering.
//! - [`oselm`]: online sequential extreme learning machine.
//! - [`baselines`]: logistic regression, Gaussian naive Bayes, random forest, RBF SVM.
//! - [`metrics`]: recall, balanced accuracy and fold aggregation.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod oselm;
pub mod resampling;
mod rows;

pub use error::{Error, Result};
