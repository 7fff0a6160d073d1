//! Random forest of fully grown CART trees with Gini splits.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{check_training, Classifier};
use crate::error::{invalid_param, Result};
use crate::rows::Rows;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(m))`.
    pub max_features: Option<usize>,
    /// Draw an n-row bootstrap sample per tree. Disabling it trains every
    /// tree on the full set in order.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Training rows per class `[clean, defective]` that reached the leaf.
    Leaf { votes: [usize; 2] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf_votes(&self, row: &[f64]) -> [usize; 2] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { votes } => return *votes,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the reached leaf, ties to clean.
    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let [c, d] = self.leaf_votes(row);
        u8::from(d > c)
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub mtry: usize,
    /// Accuracy of out-of-bag majority votes, when any row was out of bag.
    pub oob_accuracy: Option<f64>,
}

impl ForestModel {
    /// Number of trees voting defective, per row.
    pub fn defective_votes(&self, x: &DMatrix<f64>) -> Vec<usize> {
        let rows = Rows::from_matrix(x);
        (0..rows.len())
            .map(|i| {
                self.trees
                    .iter()
                    .filter(|t| t.predict_row(rows.row(i)) == 1)
                    .count()
            })
            .collect()
    }
}

impl Classifier for ForestModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    /// Majority vote of the trees, ties to clean.
    fn decide(&self, x: &DMatrix<f64>) -> Vec<u8> {
        let n_trees = self.trees.len();
        self.defective_votes(x)
            .into_iter()
            .map(|v| u8::from(2 * v > n_trees))
            .collect()
    }
}

/// Gini impurity `1 - Σ p_c²` of a node with the given class counts.
pub fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - (p0 * p0 + p1 * p1)
}

/// Trains the forest. Tree `t` draws from its own ChaCha stream `t` of
/// `seed`, so the result does not depend on how trees are scheduled.
pub fn rf_fit(x: &DMatrix<f64>, y: &[u8], config: &ForestConfig, seed: u64) -> Result<ForestModel> {
    check_training(x, y)?;
    if config.n_trees == 0 {
        return Err(invalid_param("n_trees", "need at least one tree"));
    }
    let (n, m) = x.shape();
    let mtry = config
        .max_features
        .unwrap_or_else(|| (m as f64).sqrt().ceil() as usize)
        .clamp(1, m);
    let rows = Rows::from_matrix(x);

    let grown: Vec<(DecisionTree, Vec<bool>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let (sample, in_bag) = if config.bootstrap {
                let mut in_bag = vec![false; n];
                let sample: Vec<usize> = (0..n)
                    .map(|_| {
                        let i = rng.random_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect();
                (sample, in_bag)
            } else {
                ((0..n).collect(), vec![true; n])
            };
            let tree = TreeBuilder::new(&rows, y, mtry, &mut rng).build(sample);
            (tree, in_bag)
        })
        .collect();

    let mut oob_votes = vec![[0usize; 2]; n];
    for (tree, in_bag) in &grown {
        for i in (0..n).filter(|&i| !in_bag[i]) {
            oob_votes[i][tree.predict_row(rows.row(i)) as usize] += 1;
        }
    }
    let scored: Vec<usize> = (0..n).filter(|&i| oob_votes[i][0] + oob_votes[i][1] > 0).collect();
    let oob_accuracy = (!scored.is_empty()).then(|| {
        let hits = scored
            .iter()
            .filter(|&&i| u8::from(oob_votes[i][1] > oob_votes[i][0]) == y[i])
            .count();
        hits as f64 / scored.len() as f64
    });

    Ok(ForestModel {
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        n_features: m,
        mtry,
        oob_accuracy,
    })
}

struct TreeBuilder<'a, R: Rng> {
    rows: &'a Rows,
    labels: &'a [u8],
    mtry: usize,
    rng: &'a mut R,
    nodes: Vec<TreeNode>,
    features: Vec<usize>,
    scratch: Vec<(f64, u8)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<'a, R: Rng> TreeBuilder<'a, R> {
    fn new(rows: &'a Rows, labels: &'a [u8], mtry: usize, rng: &'a mut R) -> Self {
        Self {
            rows,
            labels,
            mtry,
            rng,
            nodes: Vec::new(),
            features: (0..rows.dim()).collect(),
            scratch: Vec::new(),
        }
    }

    fn build(mut self, sample: Vec<usize>) -> DecisionTree {
        self.grow(sample);
        DecisionTree { nodes: self.nodes }
    }

    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let ones = idx.iter().filter(|&&i| self.labels[i] == 1).count();
        [idx.len() - ones, ones]
    }

    fn grow(&mut self, idx: Vec<usize>) -> usize {
        let at = self.nodes.len();
        let votes = self.counts(&idx);
        self.nodes.push(TreeNode::Leaf { votes });
        if idx.len() < 2 || votes[0] == 0 || votes[1] == 0 {
            return at;
        }
        let Some(best) = self.best_split(&idx, votes) else {
            return at;
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.rows.row(i)[best.feature] <= best.threshold);
        let left = self.grow(left_idx);
        let right = self.grow(right_idx);
        self.nodes[at] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }

    /// Lowest weighted child Gini over `mtry` random features. If none of
    /// those admits a split, the remaining features are tried in turn.
    fn best_split(&mut self, idx: &[usize], votes: [usize; 2]) -> Option<BestSplit> {
        self.features.shuffle(self.rng);
        let mut best: Option<BestSplit> = None;
        let total = idx.len() as f64;
        for rank in 0..self.features.len() {
            if rank >= self.mtry && best.is_some() {
                break;
            }
            let feature = self.features[rank];
            self.scratch.clear();
            self.scratch
                .extend(idx.iter().map(|&i| (self.rows.row(i)[feature], self.labels[i])));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left = [0usize; 2];
            for pos in 1..self.scratch.len() {
                left[self.scratch[pos - 1].1 as usize] += 1;
                let (lo, hi) = (self.scratch[pos - 1].0, self.scratch[pos].0);
                if lo >= hi {
                    continue;
                }
                let right = [votes[0] - left[0], votes[1] - left[1]];
                let nl = pos as f64;
                let score = (nl * gini(left) + (total - nl) * gini(right)) / total;
                if best.as_ref().is_none_or(|b| score < b.score) {
                    let mut threshold = 0.5 * (lo + hi);
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_arithmetic() {
        assert!((gini([3, 1]) - 0.375).abs() < 1e-15);
        assert_eq!(gini([4, 0]), 0.0);
        assert_eq!(gini([2, 2]), 0.5);
    }

    #[test]
    fn single_class_rejected() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!(rf_fit(&x, &[0, 0, 0], &ForestConfig::default(), 1).is_err());
    }

    #[test]
    fn one_tree_without_bootstrap_fits_training_data() {
        let x = DMatrix::from_row_slice(6, 2, &[0.0, 0.0, 1.0, 0.0, 2.0, 1.0, 3.0, 1.0, 4.0, 0.0, 5.0, 1.0]);
        let y = [0, 0, 1, 1, 0, 1];
        let config = ForestConfig {
            n_trees: 1,
            max_features: Some(2),
            bootstrap: false,
        };
        let forest = rf_fit(&x, &y, &config, 3).unwrap();
        assert_eq!(forest.predict(&x).unwrap(), y);
        assert_eq!(forest.oob_accuracy, None);
        for node in &forest.trees[0].nodes {
            if let TreeNode::Leaf { votes } = node {
                assert!(votes[0] + votes[1] > 0);
            }
        }
    }

    #[test]
    fn identical_stumps_vote_like_one() {
        let stump = DecisionTree {
            nodes: vec![
                TreeNode::Split {
                    feature: 0,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { votes: [3, 1] },
                TreeNode::Leaf { votes: [0, 2] },
            ],
        };
        let forest = ForestModel {
            trees: vec![stump.clone(); 5],
            n_features: 1,
            mtry: 1,
            oob_accuracy: None,
        };
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 0.5, 0.9]);
        let single: Vec<u8> = (0..3).map(|i| stump.predict_row(&[x[(i, 0)]])).collect();
        assert_eq!(forest.predict(&x).unwrap(), single);
        assert_eq!(single, vec![0, 0, 1]);
    }

    #[test]
    fn vote_ties_go_to_clean() {
        let leaf = |votes| DecisionTree {
            nodes: vec![TreeNode::Leaf { votes }],
        };
        let forest = ForestModel {
            trees: vec![leaf([0, 1]), leaf([1, 0])],
            n_features: 1,
            mtry: 1,
            oob_accuracy: None,
        };
        assert_eq!(forest.predict(&DMatrix::zeros(1, 1)).unwrap(), vec![0]);
        assert_eq!(leaf([2, 2]).predict_row(&[0.0]), 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let x = DMatrix::from_fn(80, 3, |i, j| ((i * 31 + j * 17) % 23) as f64);
        let y: Vec<u8> = (0..80).map(|i| u8::from(i % 5 == 0)).collect();
        let a = rf_fit(&x, &y, &ForestConfig { n_trees: 10, ..Default::default() }, 4).unwrap();
        let b = rf_fit(&x, &y, &ForestConfig { n_trees: 10, ..Default::default() }, 4).unwrap();
        assert_eq!(a, b);
    }
}
