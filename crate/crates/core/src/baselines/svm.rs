//! Soft-margin RBF support vector machine trained with SMO.
//!
//! Working pairs are chosen with second-order (maximal gain) selection and
//! the solver stops once the maximal KKT violation drops to `tol`.

use nalgebra::DMatrix;

use super::{check_training, Classifier};
use crate::error::{invalid_param, Result};
use crate::rows::{sq_dist, Rows};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// Box constraint.
    pub c: f64,
    /// RBF width `g` in `exp(-g‖a-b‖²)`; `None` means `1 / m`.
    pub gamma: Option<f64>,
    /// Stopping tolerance on the maximal KKT violation.
    pub tol: f64,
    /// Iteration budget in passes over the training set.
    pub max_passes: usize,
    /// Kernel row cache budget in bytes.
    pub cache_bytes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 10_000,
            cache_bytes: 256 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: DMatrix<f64>,
    /// `α_i·y_i` per support vector, within `[-C, C]`.
    pub dual_coef: Vec<f64>,
    /// Decision value is `Σ coef_i·K(sv_i, x) + bias`.
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub iterations: usize,
    /// `false` when the iteration budget ran out first.
    pub converged: bool,
}

impl SvmModel {
    pub fn decision_function(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let sv = Rows::from_matrix(&self.support_vectors);
        let rows = Rows::from_matrix(x);
        (0..rows.len())
            .map(|i| {
                let xi = rows.row(i);
                self.dual_coef
                    .iter()
                    .enumerate()
                    .map(|(s, &a)| a * (-self.gamma * sq_dist(sv.row(s), xi)).exp())
                    .sum::<f64>()
                    + self.bias
            })
            .collect()
    }
}

impl Classifier for SvmModel {
    fn n_features(&self) -> usize {
        self.support_vectors.ncols()
    }

    /// Label 1 iff the decision value is strictly positive.
    fn decide(&self, x: &DMatrix<f64>) -> Vec<u8> {
        self.decision_function(x)
            .iter()
            .map(|&f| u8::from(f > 0.0))
            .collect()
    }
}

const TAU: f64 = 1e-12;

struct KernelCache<'a> {
    rows: &'a Rows,
    gamma: f64,
    cached: Vec<Option<Vec<f64>>>,
    stamp: Vec<u64>,
    clock: u64,
    resident: usize,
    capacity: usize,
}

impl<'a> KernelCache<'a> {
    fn new(rows: &'a Rows, gamma: f64, cache_bytes: usize) -> Self {
        let n = rows.len();
        let capacity = (cache_bytes / (8 * n.max(1))).clamp(2, n.max(2));
        Self {
            rows,
            gamma,
            cached: vec![None; n],
            stamp: vec![0; n],
            clock: 0,
            resident: 0,
            capacity,
        }
    }

    fn load(&mut self, i: usize) {
        self.clock += 1;
        self.stamp[i] = self.clock;
        if self.cached[i].is_some() {
            return;
        }
        if self.resident >= self.capacity {
            let victim = (0..self.cached.len())
                .filter(|&j| self.cached[j].is_some() && j != i)
                .min_by_key(|&j| self.stamp[j])
                .expect("cache holds rows");
            self.cached[victim] = None;
            self.resident -= 1;
        }
        let xi = self.rows.row(i);
        let row = (0..self.rows.len())
            .map(|j| (-self.gamma * sq_dist(xi, self.rows.row(j))).exp())
            .collect();
        self.cached[i] = Some(row);
        self.resident += 1;
    }

    /// Kernel rows `i` and `j`, both resident.
    fn pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        self.load(i);
        self.load(j);
        (
            self.cached[i].as_deref().unwrap(),
            self.cached[j].as_deref().unwrap(),
        )
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.load(i);
        self.cached[i].as_deref().unwrap()
    }
}

/// Fits the soft-margin dual with an RBF kernel; labels map to ±1 internally.
pub fn svm_fit(x: &DMatrix<f64>, y: &[u8], config: &SvmConfig) -> Result<SvmModel> {
    check_training(x, y)?;
    let (n, m) = x.shape();
    let gamma = config.gamma.unwrap_or(1.0 / m as f64);
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid_param("gamma", format!("must be positive, got {gamma}")));
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(invalid_param("c", format!("must be positive, got {}", config.c)));
    }
    if !(config.tol > 0.0) {
        return Err(invalid_param("tol", "must be positive"));
    }
    let c = config.c;
    let rows = Rows::from_matrix(x);
    let sign: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut cache = KernelCache::new(&rows, gamma, config.cache_bytes);

    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − eᵀα with Q_ij = y_i·y_j·K_ij; K_ii = 1 for RBF.
    let mut grad = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;

    let max_iter = config.max_passes.saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal violator in the "up" set.
        let mut g_max = f64::NEG_INFINITY;
        let mut pick_i = None;
        for t in 0..n {
            let in_up = if sign[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -sign[t] * grad[t] >= g_max {
                g_max = -sign[t] * grad[t];
                pick_i = Some(t);
            }
        }
        let Some(i) = pick_i else {
            converged = true;
            break;
        };

        // j: largest second-order gain in the "low" set.
        let k_i = cache.row(i);
        let mut g_max2 = f64::NEG_INFINITY;
        let mut best_gain = f64::INFINITY;
        let mut pick_j = None;
        for t in 0..n {
            let in_low = if sign[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let violation = sign[t] * grad[t];
            g_max2 = g_max2.max(violation);
            let diff = g_max + violation;
            if diff > 0.0 {
                let curvature = (2.0 - 2.0 * k_i[t]).max(TAU);
                let gain = -(diff * diff) / curvature;
                if gain <= best_gain {
                    best_gain = gain;
                    pick_j = Some(t);
                }
            }
        }
        if g_max + g_max2 < config.tol {
            converged = true;
            break;
        }
        let Some(j) = pick_j else {
            converged = true;
            break;
        };
        iterations += 1;

        let (k_i, k_j) = cache.pair(i, j);
        let q_ij = sign[i] * sign[j] * k_i[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if sign[i] != sign[j] {
            let quad = (2.0 + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (2.0 - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;

        let di = (ai - old_i) * sign[i];
        let dj = (aj - old_j) * sign[j];
        for t in 0..n {
            grad[t] += sign[t] * (k_i[t] * di + k_j[t] * dj);
        }
    }

    // Offset: average over free vectors, else the midpoint of the feasible range.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = sign[t] * grad[t];
        if upper(alpha[t]) {
            if sign[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if sign[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { 0.5 * (ub + lb) };

    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let support_vectors = crate::dataset::select_rows(x, &support);
    let dual_coef = support.iter().map(|&t| alpha[t] * sign[t]).collect();
    Ok(SvmModel {
        support_vectors,
        dual_coef,
        bias: -rho,
        gamma,
        c,
        iterations,
        converged,
    })
}
