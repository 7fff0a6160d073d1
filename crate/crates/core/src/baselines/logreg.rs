//! L2-regularised logistic regression fitted by damped Newton steps.

use nalgebra::{DMatrix, DVector};

use super::{check_training, Classifier};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegConfig {
    pub l2: f64,
    /// Convergence threshold on the gradient max-norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2: f64,
    pub iterations: usize,
    /// `false` when `max_iter` ran out before the gradient test passed.
    pub converged: bool,
    /// Objective value at the start of every iteration and at the end.
    pub objective_trace: Vec<f64>,
}

impl LogRegModel {
    pub fn linear_scores(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let w = DVector::from_column_slice(&self.weights);
        (x * w).iter().map(|z| z + self.bias).collect()
    }

    /// P(defective | x).
    pub fn probabilities(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.linear_scores(x)
            .into_iter()
            .map(|z| 1.0 / (1.0 + (-z).exp()))
            .collect()
    }
}

impl Classifier for LogRegModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// Label 1 iff the probability is at least 0.5, i.e. the score is ≥ 0.
    fn decide(&self, x: &DMatrix<f64>) -> Vec<u8> {
        self.linear_scores(x).iter().map(|&z| u8::from(z >= 0.0)).collect()
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn scores(x: &DMatrix<f64>, w: &[f64], b: f64) -> DVector<f64> {
    let mut z = x * DVector::from_column_slice(w);
    z.add_scalar_mut(b);
    z
}

/// Mean negative log-likelihood plus `(l2 / 2)·‖w‖²`; the bias is not penalised.
pub fn logreg_objective(x: &DMatrix<f64>, y: &[u8], w: &[f64], b: f64, l2: f64) -> f64 {
    let z = scores(x, w, b);
    let nll: f64 = z
        .iter()
        .zip(y)
        .map(|(&z, &t)| softplus(z) - f64::from(t) * z)
        .sum();
    nll / y.len() as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of [`logreg_objective`] with respect to `(w, b)`.
pub fn logreg_gradient(x: &DMatrix<f64>, y: &[u8], w: &[f64], b: f64, l2: f64) -> (Vec<f64>, f64) {
    let n = y.len() as f64;
    let z = scores(x, w, b);
    let residual = DVector::from_iterator(
        y.len(),
        z.iter().zip(y).map(|(&z, &t)| 1.0 / (1.0 + (-z).exp()) - f64::from(t)),
    );
    let gw = x.tr_mul(&residual) / n;
    let grad_w = gw.iter().zip(w).map(|(g, wj)| g + l2 * wj).collect();
    (grad_w, residual.sum() / n)
}

/// Minimises [`logreg_objective`] with Newton steps and Armijo backtracking.
///
/// Stops once the gradient max-norm is at most `tol`. Running out of
/// iterations is not an error: the model comes back with `converged = false`.
pub fn logreg_fit(x: &DMatrix<f64>, y: &[u8], config: &LogRegConfig) -> Result<LogRegModel> {
    check_training(x, y)?;
    let (n, m) = x.shape();
    // Design matrix with a trailing column of ones for the bias.
    let design = DMatrix::from_fn(n, m + 1, |i, j| if j < m { x[(i, j)] } else { 1.0 });
    let l2 = config.l2;

    let mut w = vec![0.0; m];
    let mut b = 0.0;
    let mut objective = logreg_objective(x, y, &w, b, l2);
    let mut trace = vec![objective];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iter {
        let (gw, gb) = logreg_gradient(x, y, &w, b, l2);
        let grad_norm = gw.iter().fold(gb.abs(), |acc, g| acc.max(g.abs()));
        if grad_norm <= config.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let z = scores(x, &w, b);
        let weights: Vec<f64> = z
            .iter()
            .map(|&z| {
                let p = 1.0 / (1.0 + (-z).exp());
                p * (1.0 - p) / n as f64
            })
            .collect();
        let mut weighted = design.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= weights[i];
        }
        let mut hessian = design.tr_mul(&weighted);
        for j in 0..m {
            hessian[(j, j)] += l2;
        }
        let mut grad = DVector::from_column_slice(&gw);
        grad = grad.push(gb);
        let step = newton_direction(&hessian, &grad);

        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand_w: Vec<f64> = w.iter().zip(step.iter()).map(|(wj, s)| wj + t * s).collect();
            let cand_b = b + t * step[m];
            let value = logreg_objective(x, y, &cand_w, cand_b, l2);
            if value <= objective + 1e-4 * t * slope {
                w = cand_w;
                b = cand_b;
                objective = value;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        trace.push(objective);
        if !accepted {
            // No decrease is representable; the gradient test decides.
            let (gw, gb) = logreg_gradient(x, y, &w, b, l2);
            converged = gw.iter().fold(gb.abs(), |acc, g| acc.max(g.abs())) <= config.tol;
            break;
        }
    }

    Ok(LogRegModel {
        weights: w,
        bias: b,
        l2,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// Solves `H·s = -g`, adding diagonal jitter when `H` is not numerically
/// positive definite (the bias direction is unregularised).
fn newton_direction(hessian: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let scale = hessian.diagonal().amax().max(1e-300);
    let mut jitter = 0.0;
    loop {
        let mut h = hessian.clone();
        for i in 0..h.nrows() {
            h[(i, i)] += jitter;
        }
        if let Some(chol) = h.cholesky() {
            return -chol.solve(grad);
        }
        jitter = if jitter == 0.0 { scale * 1e-12 } else { jitter * 10.0 };
        if jitter > scale * 1e6 {
            return -grad.clone();
        }
    }
}
