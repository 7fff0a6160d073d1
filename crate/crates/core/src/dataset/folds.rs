use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::check_labels;
use crate::error::{invalid_param, Error, Result};

/// Assignment of each row to one of `n_folds` cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    n_folds: usize,
}

impl FoldAssignment {
    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    /// Row indices held out in `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    /// Row indices of every other fold, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }

    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (self.train_indices(fold), self.test_indices(fold))
    }
}

/// Stratified k-fold assignment.
///
/// Each class is shuffled with the seeded generator and dealt round-robin
/// over the folds; the dealing position carries over from one class to the
/// next so that fold sizes stay within one of each other.
pub fn stratified_kfold(labels: &[u8], n_folds: usize, seed: u64) -> Result<FoldAssignment> {
    check_labels(labels)?;
    if n_folds < 2 {
        return Err(invalid_param("n_folds", format!("need at least 2, got {n_folds}")));
    }
    if n_folds > labels.len() {
        return Err(invalid_param(
            "n_folds",
            format!("{n_folds} folds exceed {} rows", labels.len()),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            return Err(Error::MissingClass(class));
        }
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next;
            next = (next + 1) % n_folds;
        }
    }
    Ok(FoldAssignment { fold_of, n_folds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn per_fold(labels: &[u8], a: &FoldAssignment, class: u8) -> Vec<usize> {
        let mut counts = vec![0; a.n_folds()];
        for (i, &f) in a.fold_of().iter().enumerate() {
            if labels[i] == class {
                counts[f] += 1;
            }
        }
        counts
    }

    #[test]
    fn eight_two_split_in_halves() {
        let mut labels = vec![0u8; 8];
        labels.extend([1, 1]);
        let a = stratified_kfold(&labels, 2, 7).unwrap();
        assert_eq!(per_fold(&labels, &a, 0), vec![4, 4]);
        assert_eq!(per_fold(&labels, &a, 1), vec![1, 1]);
    }

    #[test]
    fn two_positives_over_five_folds() {
        let mut labels = vec![0u8; 10];
        labels.extend([1, 1]);
        let a = stratified_kfold(&labels, 5, 3).unwrap();
        let pos = per_fold(&labels, &a, 1);
        assert_eq!(pos.iter().filter(|&&c| c == 1).count(), 2);
        assert_eq!(pos.iter().sum::<usize>(), 2);
    }

    #[test]
    fn leave_one_out_when_folds_equal_rows() {
        let labels = [0u8, 1, 0, 0, 1, 0, 1];
        let a = stratified_kfold(&labels, labels.len(), 11).unwrap();
        for f in 0..labels.len() {
            assert_eq!(a.test_indices(f).len(), 1);
        }
    }

    #[test]
    fn errors() {
        assert!(stratified_kfold(&[0, 1, 0], 4, 0).is_err());
        assert!(stratified_kfold(&[0, 0, 0], 2, 0).is_err());
        assert!(stratified_kfold(&[0, 1, 0], 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn stratification_invariants(
            labels in proptest::collection::vec(0u8..2, 2..200),
            folds in 2usize..12,
            seed in any::<u64>(),
        ) {
            let counts = crate::dataset::class_counts(&labels);
            prop_assume!(counts[0] > 0 && counts[1] > 0 && folds <= labels.len());
            let a = stratified_kfold(&labels, folds, seed).unwrap();
            prop_assert_eq!(&a, &stratified_kfold(&labels, folds, seed).unwrap());
            for class in [0u8, 1] {
                let exact = counts[class as usize] as f64 / folds as f64;
                for c in per_fold(&labels, &a, class) {
                    prop_assert!((c as f64 - exact).abs() <= 1.0);
                }
            }
            let mut seen = vec![false; labels.len()];
            for f in 0..folds {
                let test = a.test_indices(f);
                prop_assert!(!test.is_empty());
                for i in test {
                    prop_assert!(!seen[i]);
                    seen[i] = true;
                }
            }
            prop_assert!(seen.iter().all(|&s| s));
        }
    }
}
