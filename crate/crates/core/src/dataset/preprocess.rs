//! Z-score standardisation followed by a principal-component projection.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid_param, Error, Result};

/// Fitted standardise-then-project transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    means: Vec<f64>,
    scales: Vec<f64>,
    constant: Vec<bool>,
    /// m×d, rows are unit principal axes in the standardised space.
    components: DMatrix<f64>,
    /// Eigenvalues of the standardised sample covariance for the kept axes.
    eigenvalues: Vec<f64>,
    explained_ratio: Vec<f64>,
}

impl Preprocessor {
    /// Fits on the rows of `x`, keeping the fewest leading components whose
    /// cumulative explained variance reaches `variance_target`.
    ///
    /// Constant columns are centred with divisor 1 and carry no variance.
    pub fn fit(x: &DMatrix<f64>, variance_target: f64) -> Result<Self> {
        let (n, d) = x.shape();
        if n < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 rows to fit a preprocessor, got {n}"
            )));
        }
        if !(variance_target > 0.0 && variance_target <= 1.0) {
            return Err(invalid_param(
                "variance_target",
                format!("must lie in (0, 1], got {variance_target}"),
            ));
        }

        let mut means = Vec::with_capacity(d);
        let mut scales = Vec::with_capacity(d);
        let mut constant = Vec::with_capacity(d);
        for col in x.column_iter() {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let sd = var.sqrt();
            let flat = sd <= 1e-12 * mean.abs().max(1.0);
            means.push(mean);
            scales.push(if flat { 1.0 } else { sd });
            constant.push(flat);
        }
        if constant.iter().all(|&c| c) {
            return Err(Error::InvalidData(
                "all features are constant; nothing to decompose".into(),
            ));
        }

        let z = standardize(x, &means, &scales, &constant);
        let cov = z.tr_mul(&z) / (n - 1) as f64;
        let eig = SymmetricEigen::new(cov);

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let total: f64 = values.iter().sum();

        let mut kept = 0;
        let mut cumulative = 0.0;
        for &v in &values {
            kept += 1;
            cumulative += v / total;
            if cumulative >= variance_target - 1e-12 {
                break;
            }
        }

        let mut components = DMatrix::zeros(kept, d);
        for (r, &i) in order.iter().take(kept).enumerate() {
            let mut axis: DVector<f64> = eig.eigenvectors.column(i).into_owned();
            // Sign convention: the largest-magnitude loading is positive.
            let pivot = axis.iamax();
            if axis[pivot] < 0.0 {
                axis.neg_mut();
            }
            components.row_mut(r).copy_from(&axis.transpose());
        }
        let eigenvalues = values[..kept].to_vec();
        let explained_ratio = eigenvalues.iter().map(|v| v / total).collect();

        Ok(Self {
            means,
            scales,
            constant,
            components,
            eigenvalues,
            explained_ratio,
        })
    }

    /// Standardisation with zero means, unit scales and identity components.
    pub fn identity(d: usize) -> Self {
        Self {
            means: vec![0.0; d],
            scales: vec![1.0; d],
            constant: vec![false; d],
            components: DMatrix::identity(d, d),
            eigenvalues: vec![1.0; d],
            explained_ratio: vec![1.0 / d as f64; d],
        }
    }

    /// Projects the rows of `x` into the retained component space.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.n_inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs(),
                actual: x.ncols(),
            });
        }
        let z = standardize(x, &self.means, &self.scales, &self.constant);
        Ok(z * self.components.transpose())
    }

    pub fn n_inputs(&self) -> usize {
        self.means.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn constant_features(&self) -> &[bool] {
        &self.constant
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn explained_ratio(&self) -> &[f64] {
        &self.explained_ratio
    }
}

fn standardize(x: &DMatrix<f64>, means: &[f64], scales: &[f64], constant: &[bool]) -> DMatrix<f64> {
    let mut z = x.clone();
    for (j, mut col) in z.column_iter_mut().enumerate() {
        if constant[j] {
            col.fill(0.0);
        } else {
            col.apply(|v| *v = (*v - means[j]) / scales[j]);
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn single_direction_of_variance() {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 5.0, 1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let p = Preprocessor::fit(&x, 0.9).unwrap();
        assert_eq!(p.n_components(), 1);
        assert!(close(p.components()[(0, 0)].abs(), 1.0, 1e-12));
        assert!(close(p.components()[(0, 1)], 0.0, 1e-12));
        assert_eq!(p.constant_features(), &[false, true]);
    }

    #[test]
    fn symmetric_cross_needs_both_axes() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let p = Preprocessor::fit(&x, 0.9).unwrap();
        assert_eq!(p.n_components(), 2);
        for r in p.explained_ratio() {
            assert!(close(*r, 0.5, 1e-12));
        }
    }

    #[test]
    fn all_constant_is_an_error() {
        let x = DMatrix::from_element(5, 3, 2.0);
        assert!(Preprocessor::fit(&x, 0.9).is_err());
    }

    #[test]
    fn training_mean_maps_to_origin() {
        let x = DMatrix::from_fn(20, 3, |i, j| ((i * 7 + j * 3) % 11) as f64 + j as f64);
        let p = Preprocessor::fit(&x, 0.99).unwrap();
        let mean = DMatrix::from_row_slice(1, 3, p.means());
        let out = p.transform(&mean).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn identity_is_a_no_op() {
        let x = DMatrix::from_fn(5, 3, |i, j| (i as f64) - 2.0 * j as f64);
        let out = Preprocessor::identity(3).transform(&x).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn dimension_mismatch() {
        let p = Preprocessor::identity(3);
        assert!(p.transform(&DMatrix::zeros(2, 2)).is_err());
    }
}
