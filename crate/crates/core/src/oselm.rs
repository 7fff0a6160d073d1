//! Online sequential extreme learning machine.
//!
//! A single hidden layer with a frozen random sigmoid map feeds one linear
//! output unit. The output weights are solved in closed form on an initial
//! block and then refined chunk by chunk with a Woodbury-style recursion
//! that never revisits earlier rows.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid_param, Error, Result};

/// Random input-to-hidden map, drawn once and never trained.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenMap {
    /// m×b input weights.
    pub weights: DMatrix<f64>,
    /// b hidden biases.
    pub biases: DVector<f64>,
}

impl HiddenMap {
    /// Draws weights then biases i.i.d. uniform on `[-1, 1]`.
    pub fn random(inputs: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = DMatrix::from_fn(inputs, hidden, |_, _| rng.random_range(-1.0..=1.0));
        let biases = DVector::from_fn(hidden, |_, _| rng.random_range(-1.0..=1.0));
        Self { weights, biases }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.weights.ncols()
    }

    /// Hidden-layer activations `sigmoid(X·W + 1·bᵀ)`, one row per input row.
    pub fn activations(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs(),
                actual: x.ncols(),
            });
        }
        let mut g = x * &self.weights;
        for (j, mut col) in g.column_iter_mut().enumerate() {
            let b = self.biases[j];
            col.apply(|v| *v = sigmoid(*v + b));
        }
        Ok(g)
    }
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Trained OS-ELM state.
#[derive(Debug, Clone, PartialEq)]
pub struct OselmModel {
    pub map: HiddenMap,
    /// Output weights, one per hidden unit.
    pub output_weights: DVector<f64>,
    /// Inverse of the regularised hidden-layer Gram matrix.
    pub k: DMatrix<f64>,
    pub ridge: f64,
    /// Rows absorbed so far.
    pub seen: usize,
}

impl OselmModel {
    /// Initial batch solve with a freshly drawn hidden map.
    ///
    /// Requires at least as many rows as hidden units.
    pub fn init(
        x0: &DMatrix<f64>,
        t0: &[f64],
        hidden: usize,
        seed: u64,
        ridge: f64,
    ) -> Result<Self> {
        if hidden < 1 {
            return Err(invalid_param("hidden", "need at least one hidden unit"));
        }
        let map = HiddenMap::random(x0.ncols(), hidden, seed);
        Self::init_with_map(map, x0, t0, ridge)
    }

    /// Initial batch solve `K0 = (G0ᵀG0 + εI)⁻¹`, `δ0 = K0·G0ᵀ·t0`.
    pub fn init_with_map(map: HiddenMap, x0: &DMatrix<f64>, t0: &[f64], ridge: f64) -> Result<Self> {
        let b = map.hidden();
        if x0.nrows() < b {
            return Err(invalid_param(
                "x0",
                format!("initial block has {} rows, needs at least {b}", x0.nrows()),
            ));
        }
        if t0.len() != x0.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x0.nrows(),
                actual: t0.len(),
            });
        }
        if !(ridge >= 0.0) {
            return Err(invalid_param("ridge", format!("must be non-negative, got {ridge}")));
        }
        let g = map.activations(x0)?;
        let mut gram = g.tr_mul(&g);
        for i in 0..b {
            gram[(i, i)] += ridge;
        }
        let k = spd_inverse(gram).ok_or_else(|| {
            Error::Singular("hidden-layer Gram matrix is not positive definite".into())
        })?;
        let t = DVector::from_column_slice(t0);
        let output_weights = &k * (g.tr_mul(&t));
        Ok(Self {
            map,
            output_weights,
            k,
            ridge,
            seen: x0.nrows(),
        })
    }

    /// Absorbs one chunk of rows.
    ///
    /// `K ← K − K·Gᵀ(I + G·K·Gᵀ)⁻¹·G·K` then `δ ← δ + K·Gᵀ(t − G·δ)`, with the
    /// updated `K` in the second step. Costs O(b²c + c³) for a chunk of c rows.
    pub fn update(&self, x1: &DMatrix<f64>, t1: &[f64]) -> Result<Self> {
        if x1.ncols() != self.map.inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.map.inputs(),
                actual: x1.ncols(),
            });
        }
        if t1.len() != x1.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x1.nrows(),
                actual: t1.len(),
            });
        }
        let c = x1.nrows();
        if c == 0 {
            return Ok(self.clone());
        }
        let g = self.map.activations(x1)?;
        // b×c
        let kgt = &self.k * g.transpose();
        let mut inner = &g * &kgt;
        for i in 0..c {
            inner[(i, i)] += 1.0;
        }
        let inner_inv = spd_inverse(inner)
            .ok_or_else(|| Error::Singular("chunk update matrix is singular".into()))?;
        let mut k = &self.k - &kgt * inner_inv * kgt.transpose();
        symmetrize(&mut k);

        let t = DVector::from_column_slice(t1);
        let residual = t - &g * &self.output_weights;
        let output_weights = &self.output_weights + &k * (g.tr_mul(&residual));
        Ok(Self {
            map: self.map.clone(),
            output_weights,
            k,
            ridge: self.ridge,
            seen: self.seen + c,
        })
    }

    /// Raw output scores `sigmoid(X·W + 1·bᵀ)·δ`.
    pub fn scores(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let g = self.map.activations(x)?;
        Ok((g * &self.output_weights).iter().copied().collect())
    }

    /// Scores and their 0/1 labels (label 1 iff score ≥ 0.5).
    pub fn predict_scores(&self, x: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<u8>)> {
        let scores = self.scores(x)?;
        let labels = scores.iter().map(|&s| u8::from(s >= 0.5)).collect();
        Ok((scores, labels))
    }

    pub fn hidden(&self) -> usize {
        self.map.hidden()
    }

    pub fn inputs(&self) -> usize {
        self.map.inputs()
    }

    /// Serialises the model as text with every float stored as its IEEE-754
    /// bit pattern, so that [`OselmModel::from_snapshot`] restores it exactly.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "oselm-snapshot 1");
        let _ = writeln!(
            out,
            "inputs {} hidden {} seen {} ridge {:016x}",
            self.inputs(),
            self.hidden(),
            self.seen,
            self.ridge.to_bits()
        );
        write_floats(&mut out, "weights", self.map.weights.iter());
        write_floats(&mut out, "biases", self.map.biases.iter());
        write_floats(&mut out, "output", self.output_weights.iter());
        write_floats(&mut out, "k", self.k.iter());
        out
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("snapshot truncated before {what}"),
            })
        };
        let (_, magic) = next("header")?;
        if magic.trim() != "oselm-snapshot 1" {
            return Err(Error::Parse {
                line: 1,
                message: "not an OS-ELM snapshot".into(),
            });
        }
        let (ln, dims) = next("dimensions")?;
        let f: Vec<&str> = dims.split_whitespace().collect();
        let bad = |msg: &str| Error::Parse {
            line: ln + 1,
            message: msg.to_string(),
        };
        if f.len() != 8 || f[0] != "inputs" || f[2] != "hidden" || f[4] != "seen" || f[6] != "ridge" {
            return Err(bad("malformed dimension line"));
        }
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| bad("bad integer"));
        let m = parse_usize(f[1])?;
        let b = parse_usize(f[3])?;
        let seen = parse_usize(f[5])?;
        let ridge = parse_bits(f[7]).ok_or_else(|| bad("bad float bits"))?;

        let mut read = |tag: &str, len: usize| -> Result<Vec<f64>> {
            let (ln, line) = next(tag)?;
            let mut parts = line.split_whitespace();
            let err = |msg: String| Error::Parse {
                line: ln + 1,
                message: msg,
            };
            if parts.next() != Some(tag) {
                return Err(err(format!("expected `{tag}` record")));
            }
            let values: Option<Vec<f64>> = parts.map(parse_bits).collect();
            let values = values.ok_or_else(|| err("bad float bits".into()))?;
            if values.len() != len {
                return Err(err(format!("`{tag}` has {} values, expected {len}", values.len())));
            }
            Ok(values)
        };
        let weights = DMatrix::from_column_slice(m, b, &read("weights", m * b)?);
        let biases = DVector::from_vec(read("biases", b)?);
        let output_weights = DVector::from_vec(read("output", b)?);
        let k = DMatrix::from_column_slice(b, b, &read("k", b * b)?);
        Ok(Self {
            map: HiddenMap { weights, biases },
            output_weights,
            k,
            ridge,
            seen,
        })
    }
}

fn write_floats<'a>(out: &mut String, tag: &str, values: impl Iterator<Item = &'a f64>) {
    out.push_str(tag);
    for v in values {
        let _ = write!(out, " {:016x}", v.to_bits());
    }
    out.push('\n');
}

fn parse_bits(s: &str) -> Option<f64> {
    u64::from_str_radix(s, 16).ok().map(f64::from_bits)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Inverse of a symmetric positive-definite matrix via Cholesky, falling
/// back to LU when rounding has cost definiteness.
fn spd_inverse(a: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let mut inv = match a.clone().cholesky() {
        Some(chol) => chol.inverse(),
        None => a.try_inverse()?,
    };
    if inv.iter().any(|v| !v.is_finite()) {
        return None;
    }
    symmetrize(&mut inv);
    Some(inv)
}

/// How the benchmark feeds training rows to OS-ELM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OselmSchedule {
    /// Hidden units per input feature.
    pub hidden_ratio: f64,
    /// Initial block size per hidden unit.
    pub init_ratio: f64,
    /// Rows per sequential chunk.
    pub chunk: usize,
    pub ridge: f64,
}

impl Default for OselmSchedule {
    fn default() -> Self {
        Self {
            hidden_ratio: 1.75,
            init_ratio: 1.5,
            chunk: 50,
            ridge: 1e-8,
        }
    }
}

impl OselmSchedule {
    pub fn hidden_units(&self, inputs: usize) -> usize {
        ((self.hidden_ratio * inputs as f64).round() as usize).max(1)
    }

    pub fn initial_rows(&self, hidden: usize) -> usize {
        ((self.init_ratio * hidden as f64).round() as usize).max(hidden)
    }

    /// Trains on 0/1 labels: rows are shuffled with `seed`, the first block
    /// initialises the model and the rest arrive in fixed-size chunks.
    pub fn fit(&self, x: &DMatrix<f64>, labels: &[u8], seed: u64) -> Result<OselmModel> {
        if labels.len() != x.nrows() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                actual: labels.len(),
            });
        }
        if self.chunk == 0 {
            return Err(invalid_param("chunk", "chunk size must be positive"));
        }
        let n = x.nrows();
        let hidden = self.hidden_units(x.ncols());
        if n < hidden {
            return Err(invalid_param(
                "x",
                format!("{n} training rows cannot initialise {hidden} hidden units"),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map_seed = rng.random::<u64>();
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);

        let take = |idx: &[usize]| {
            let xs = crate::dataset::select_rows(x, idx);
            let ts: Vec<f64> = idx.iter().map(|&i| f64::from(labels[i])).collect();
            (xs, ts)
        };
        let first = self.initial_rows(hidden).min(n);
        let (x0, t0) = take(&order[..first]);
        let mut model = OselmModel::init(&x0, &t0, hidden, map_seed, self.ridge)?;
        for chunk in order[first..].chunks(self.chunk) {
            let (xc, tc) = take(chunk);
            model = model.update(&xc, &tc)?;
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn one_hidden_unit_is_scalar_least_squares() {
        let x = random(6, 2, 1);
        let t = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let model = OselmModel::init(&x, &t, 1, 3, 0.0).unwrap();
        let g = model.map.activations(&x).unwrap();
        let gt: f64 = (0..6).map(|i| g[(i, 0)] * t[i]).sum();
        let gg: f64 = (0..6).map(|i| g[(i, 0)] * g[(i, 0)]).sum();
        assert!((model.output_weights[0] - gt / gg).abs() <= 1e-12 * (gt / gg).abs());
    }

    #[test]
    fn zero_targets_give_zero_weights() {
        let x = random(20, 3, 2);
        let model = OselmModel::init(&x, &[0.0; 20], 5, 4, 1e-8).unwrap();
        assert!(model.output_weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn empty_chunk_is_a_no_op() {
        let x = random(20, 3, 2);
        let t: Vec<f64> = (0..20).map(|i| (i % 2) as f64).collect();
        let model = OselmModel::init(&x, &t, 5, 4, 1e-8).unwrap();
        let same = model.update(&DMatrix::zeros(0, 3), &[]).unwrap();
        assert_eq!(same, model);
    }

    #[test]
    fn zero_output_weights_predict_clean() {
        let x = random(10, 3, 5);
        let mut model = OselmModel::init(&x, &[1.0; 10], 4, 1, 1e-8).unwrap();
        model.output_weights.fill(0.0);
        let (scores, labels) = model.predict_scores(&x).unwrap();
        assert!(scores.iter().all(|&s| s == 0.0));
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn errors() {
        let x = random(3, 2, 0);
        assert!(OselmModel::init(&x, &[0.0; 3], 4, 0, 1e-8).is_err());
        assert!(OselmModel::init(&x, &[0.0; 2], 2, 0, 1e-8).is_err());
        let model = OselmModel::init(&x, &[0.0; 3], 2, 0, 1e-8).unwrap();
        assert!(model.update(&random(2, 3, 1), &[0.0; 2]).is_err());
        assert!(model.scores(&random(2, 3, 1)).is_err());
    }

    #[test]
    fn snapshot_round_trips_bit_exactly() {
        let x = random(40, 4, 8);
        let t: Vec<f64> = (0..40).map(|i| (i % 3 == 0) as u8 as f64).collect();
        let model = OselmModel::init(&x, &t, 7, 9, 1e-8).unwrap();
        let text = model.to_snapshot();
        let back = OselmModel::from_snapshot(&text).unwrap();
        assert_eq!(back.to_snapshot(), text);
        let bits = |m: &OselmModel| m.k.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&model));
        assert!(OselmModel::from_snapshot("nonsense").is_err());
        assert!(OselmModel::from_snapshot(&text.replace("output", "outptu")).is_err());
    }

    #[test]
    fn schedule_sizes() {
        let s = OselmSchedule::default();
        assert_eq!(s.hidden_units(8), 14);
        assert_eq!(s.hidden_units(1), 2);
        assert_eq!(s.initial_rows(14), 21);
        let x = random(200, 4, 3);
        let y: Vec<u8> = (0..200).map(|i| u8::from(x[(i, 0)] > 0.0)).collect();
        let model = s.fit(&x, &y, 5).unwrap();
        assert_eq!(model.seen, 200);
        assert_eq!(model, s.fit(&x, &y, 5).unwrap());
    }
}
