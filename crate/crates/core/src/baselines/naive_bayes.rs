use nalgebra::DMatrix;

use super::{check_training, Classifier};
use crate::error::Result;

/// Gaussian naive Bayes with per-class, per-feature normal likelihoods.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNbModel {
    /// Class frequencies `[clean, defective]`.
    pub priors: [f64; 2],
    pub means: [Vec<f64>; 2],
    /// Population variances, never below `variance_floor`.
    pub variances: [Vec<f64>; 2],
    pub variance_floor: f64,
}

impl GaussianNbModel {
    fn log_joint(&self, class: usize, row: impl Iterator<Item = f64>) -> f64 {
        let ln_2pi = (2.0 * std::f64::consts::PI).ln();
        let mut total = self.priors[class].ln();
        for (j, v) in row.enumerate() {
            let var = self.variances[class][j];
            let diff = v - self.means[class][j];
            total -= 0.5 * (ln_2pi + var.ln() + diff * diff / var);
        }
        total
    }

    /// `ln P(defective | x) - ln P(clean | x)` for every row.
    pub fn log_odds(&self, x: &DMatrix<f64>) -> Vec<f64> {
        x.row_iter()
            .map(|r| self.log_joint(1, r.iter().copied()) - self.log_joint(0, r.iter().copied()))
            .collect()
    }

    /// Posterior `[P(clean | x), P(defective | x)]` for every row.
    pub fn posteriors(&self, x: &DMatrix<f64>) -> Vec<[f64; 2]> {
        self.log_odds(x)
            .into_iter()
            .map(|lo| {
                let p1 = 1.0 / (1.0 + (-lo).exp());
                [1.0 - p1, p1]
            })
            .collect()
    }
}

impl Classifier for GaussianNbModel {
    fn n_features(&self) -> usize {
        self.means[0].len()
    }

    /// Ties in posterior go to the clean class.
    fn decide(&self, x: &DMatrix<f64>) -> Vec<u8> {
        self.log_odds(x).iter().map(|&lo| u8::from(lo > 0.0)).collect()
    }
}

/// Fits class priors, means and population variances.
///
/// Variances are floored at `1e-9` times the largest per-feature variance of
/// the whole training set.
pub fn gnb_fit(x: &DMatrix<f64>, y: &[u8]) -> Result<GaussianNbModel> {
    check_training(x, y)?;
    let (n, m) = x.shape();

    let max_var = x
        .column_iter()
        .map(|c| {
            let mean = c.sum() / n as f64;
            c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
        })
        .fold(0.0, f64::max);
    let floor = if max_var > 0.0 { 1e-9 * max_var } else { 1e-9 };

    let mut counts = [0usize; 2];
    let mut means = [vec![0.0; m], vec![0.0; m]];
    for (i, &label) in y.iter().enumerate() {
        let c = label as usize;
        counts[c] += 1;
        for j in 0..m {
            means[c][j] += x[(i, j)];
        }
    }
    for c in 0..2 {
        for v in &mut means[c] {
            *v /= counts[c] as f64;
        }
    }
    let mut variances = [vec![0.0; m], vec![0.0; m]];
    for (i, &label) in y.iter().enumerate() {
        let c = label as usize;
        for j in 0..m {
            variances[c][j] += (x[(i, j)] - means[c][j]).powi(2);
        }
    }
    for c in 0..2 {
        for v in &mut variances[c] {
            *v = (*v / counts[c] as f64).max(floor);
        }
    }

    Ok(GaussianNbModel {
        priors: [counts[0] as f64 / n as f64, counts[1] as f64 / n as f64],
        means,
        variances,
        variance_floor: floor,
    })
}
