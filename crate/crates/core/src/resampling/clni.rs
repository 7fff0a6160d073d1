//! Closest-list noise identification.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid_param, Error, Result};
use crate::rows::{sq_dist, Rows};

/// Outcome of a noise-filtering run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterReport {
    /// `true` for rows that survive.
    pub keep_mask: Vec<bool>,
    /// Removed rows per label, `[clean, defective]`.
    pub removed_by_class: [usize; 2],
    pub kn: usize,
    /// Passes actually performed.
    pub passes: usize,
}

impl FilterReport {
    pub fn kept_indices(&self) -> Vec<usize> {
        (0..self.keep_mask.len()).filter(|&i| self.keep_mask[i]).collect()
    }

    pub fn removed(&self) -> usize {
        self.removed_by_class.iter().sum()
    }
}

/// Single-pass CLNI.
///
/// Row `i` is flagged when strictly more than `kn / 2` of its `kn` nearest
/// neighbours (Euclidean, excluding itself, distance ties to the lower
/// index) carry the other label. All flags are computed on the input before
/// any row is dropped.
pub fn clni_filter(x: &DMatrix<f64>, labels: &[u8], kn: usize) -> Result<FilterReport> {
    clni_filter_passes(x, labels, kn, 1)
}

/// CLNI repeated up to `passes` times, each pass on the survivors of the
/// previous one. Stops early once a pass removes nothing or fewer than
/// `kn + 1` rows remain.
pub fn clni_filter_passes(
    x: &DMatrix<f64>,
    labels: &[u8],
    kn: usize,
    passes: usize,
) -> Result<FilterReport> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
        });
    }
    if kn < 1 {
        return Err(invalid_param("kn", "need at least one neighbour"));
    }
    if kn >= n {
        return Err(invalid_param("kn", format!("{kn} neighbours need more than {n} rows")));
    }
    if passes < 1 {
        return Err(invalid_param("passes", "need at least one pass"));
    }

    let rows = Rows::from_matrix(x);
    let mut alive: Vec<usize> = (0..n).collect();
    let mut keep_mask = vec![true; n];
    let mut done = 0;
    while done < passes && alive.len() > kn {
        done += 1;
        let noisy = flag_noisy(&rows, labels, &alive, kn);
        if !noisy.iter().any(|&f| f) {
            break;
        }
        let mut survivors = Vec::with_capacity(alive.len());
        for (pos, &i) in alive.iter().enumerate() {
            if noisy[pos] {
                keep_mask[i] = false;
            } else {
                survivors.push(i);
            }
        }
        alive = survivors;
    }

    let mut removed_by_class = [0; 2];
    for i in 0..n {
        if !keep_mask[i] {
            removed_by_class[labels[i] as usize] += 1;
        }
    }
    Ok(FilterReport {
        keep_mask,
        removed_by_class,
        kn,
        passes: done,
    })
}

fn flag_noisy(rows: &Rows, labels: &[u8], alive: &[usize], kn: usize) -> Vec<bool> {
    alive
        .par_iter()
        .map_init(
            || Vec::with_capacity(alive.len()),
            |scratch: &mut Vec<(f64, usize)>, &i| {
                scratch.clear();
                let xi = rows.row(i);
                scratch.extend(
                    alive
                        .iter()
                        .filter(|&&j| j != i)
                        .map(|&j| (sq_dist(xi, rows.row(j)), j)),
                );
                let by_distance = |a: &(f64, usize), b: &(f64, usize)| {
                    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
                };
                if scratch.len() > kn {
                    scratch.select_nth_unstable_by(kn - 1, by_distance);
                }
                let opposite = scratch[..kn]
                    .iter()
                    .filter(|&&(_, j)| labels[j] != labels[i])
                    .count();
                2 * opposite > kn
            },
        )
        .collect()
}
