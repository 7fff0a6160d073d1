//! Confusion counts, recall, balanced accuracy and mean/std aggregation.
//!
//! Label 1 (defective) is the positive class. Metrics that would divide by
//! zero are errors, never silent zeros.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same predictions scored with label 0 as the positive class.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidData("no predictions to score".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fn_ += 1,
            _ => {
                return Err(Error::InvalidData(format!(
                    "labels must be 0 or 1, got ({t}, {p})"
                )))
            }
        }
    }
    Ok(cm)
}

/// `tp / (tp + fn)`.
pub fn recall(cm: &ConfusionMatrix) -> Result<f64> {
    let actual = cm.tp + cm.fn_;
    if actual == 0 {
        return Err(Error::UndefinedMetric(
            "recall needs at least one defective row in the truth".into(),
        ));
    }
    Ok(cm.tp as f64 / actual as f64)
}

/// Mean of the per-class accuracies, `(tn/(tn+fp) + tp/(tp+fn)) / 2`.
pub fn balanced_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.tn + cm.fp == 0 {
        return Err(Error::UndefinedMetric(
            "balanced accuracy needs at least one clean row in the truth".into(),
        ));
    }
    Ok((recall(&cm.swapped())? + recall(cm)?) / 2.0)
}

/// Mean and sample standard deviation of a set of observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub mean: f64,
    /// `n - 1` denominator; zero for a single observation.
    pub std: f64,
    pub count: usize,
}

pub fn aggregate(values: &[f64]) -> Result<MetricSummary> {
    let count = values.len();
    if count == 0 {
        return Err(Error::InvalidData("cannot aggregate an empty list".into()));
    }
    // Welford's running update.
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let std = if count == 1 { 0.0 } else { (m2 / (count - 1) as f64).sqrt() };
    Ok(MetricSummary { mean, std, count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cm(tp: usize, fp: usize, tn: usize, fn_: usize) -> ConfusionMatrix {
        ConfusionMatrix { tp, fp, tn, fn_ }
    }

    #[test]
    fn counts_each_cell() {
        assert_eq!(confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap(), cm(1, 1, 1, 1));
        let perfect = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((perfect.fp, perfect.fn_), (0, 0));
    }

    #[test]
    fn confusion_errors() {
        assert!(confusion(&[1, 0], &[1]).is_err());
        assert!(confusion(&[], &[]).is_err());
        assert!(confusion(&[2], &[1]).is_err());
    }

    #[test]
    fn recall_values() {
        assert_eq!(recall(&cm(3, 0, 0, 1)).unwrap(), 0.75);
        assert_eq!(recall(&cm(0, 0, 0, 5)).unwrap(), 0.0);
        assert_eq!(recall(&cm(4, 0, 3, 0)).unwrap(), 1.0);
        assert!(recall(&cm(0, 2, 3, 0)).is_err());
    }

    #[test]
    fn balanced_accuracy_values() {
        assert_eq!(balanced_accuracy(&cm(2, 0, 3, 0)).unwrap(), 1.0);
        assert_eq!(balanced_accuracy(&cm(0, 0, 9, 4)).unwrap(), 0.5);
        assert_eq!(balanced_accuracy(&cm(3, 2, 8, 1)).unwrap(), 0.775);
        assert!(balanced_accuracy(&cm(3, 0, 0, 1)).is_err());
        assert!(balanced_accuracy(&cm(0, 2, 3, 0)).is_err());
    }

    #[test]
    fn aggregate_values() {
        let s = aggregate(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!((s.mean, s.std, s.count), (0.5, 0.0, 3));
        let s = aggregate(&[0.0, 1.0]).unwrap();
        assert_eq!(s.mean, 0.5);
        assert!((s.std - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(aggregate(&[0.3]).unwrap().std, 0.0);
        assert!(aggregate(&[]).is_err());
    }

    proptest! {
        #[test]
        fn metric_identities(tp in 0usize..50, fp in 0usize..50, tn in 0usize..50, fn_ in 0usize..50) {
            let m = cm(tp, fp, tn, fn_);
            if tp + fn_ > 0 {
                let r = recall(&m).unwrap();
                prop_assert!((0.0..=1.0).contains(&r));
            }
            if tp + fn_ > 0 && tn + fp > 0 {
                let ba = balanced_accuracy(&m).unwrap();
                prop_assert!((0.0..=1.0).contains(&ba));
                let via_recalls = (recall(&m).unwrap() + recall(&m.swapped()).unwrap()) / 2.0;
                prop_assert_eq!(ba, via_recalls);
            }
        }

        #[test]
        fn permutation_invariance(pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..60), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let (t, p): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (ts, ps): (Vec<u8>, Vec<u8>) = shuffled.into_iter().unzip();
            let a = confusion(&t, &p).unwrap();
            let b = confusion(&ts, &ps).unwrap();
            prop_assert_eq!(a, b);
            prop_assert_eq!(recall(&a).ok(), recall(&b).ok());
            prop_assert_eq!(balanced_accuracy(&a).ok(), balanced_accuracy(&b).ok());
        }
    }
}
