//! Lloyd's k-means with greedy k-means++ seeding.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid_param, Result};
use crate::rows::{sq_dist, Rows};

/// Result of clustering `n` rows into `k` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    /// k×m cluster centres.
    pub centers: DMatrix<f64>,
    /// Cluster index of every clustered row.
    pub assignment: Vec<usize>,
    /// Member count of every cluster; all at least 1.
    pub sizes: Vec<usize>,
    /// Sum of squared distances of rows to their assigned centre.
    pub inertia: f64,
    /// Inertia after each assignment step, in order.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// Row indices belonging to each cluster, ascending within a cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k()];
        for (i, &c) in self.assignment.iter().enumerate() {
            groups[c].push(i);
        }
        groups
    }
}

/// Clusters the rows of `x` into `k` groups.
///
/// Runs Lloyd from ten seeded k-means++ starts and keeps the best. Each run
/// iterates until the largest centre shift is at most `tol` or `max_iter`
/// iterations have run. Rows go to their nearest centre, ties to the lowest
/// index. A cluster left empty seizes the row farthest from its own centre.
/// When fewer than `k` distinct rows exist that repair cannot respect the
/// tie rule; the seized row is then taken from the largest cluster.
pub fn kmeans(
    x: &DMatrix<f64>,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ClusterModel> {
    let n = x.nrows();
    if k < 1 {
        return Err(invalid_param("k", "need at least one cluster"));
    }
    if k > n {
        return Err(invalid_param("k", format!("{k} clusters exceed {n} rows")));
    }
    let rows = Rows::from_matrix(x);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<ClusterModel> = None;
    for _ in 0..RESTARTS {
        let run = lloyd(&rows, k, &mut rng, max_iter, tol);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Independent seedings per call; the lowest final inertia wins, ties to the
/// earliest run.
const RESTARTS: usize = 10;

fn lloyd(rows: &Rows, k: usize, rng: &mut ChaCha8Rng, max_iter: usize, tol: f64) -> ClusterModel {
    let mut centers = plus_plus_init(rows, k, rng);
    let mut history = Vec::new();
    let mut iterations = 0;
    let (mut assignment, mut dists);
    loop {
        (assignment, dists) = assign_with_repair(rows, &mut centers);
        history.push(dists.iter().sum());
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        let updated = means(rows, &assignment, &centers);
        let shift = (0..k)
            .map(|c| sq_dist(centers.row(c), updated.row(c)).sqrt())
            .fold(0.0, f64::max);
        centers = updated;
        if shift <= tol {
            (assignment, dists) = assign_with_repair(rows, &mut centers);
            history.push(dists.iter().sum());
            break;
        }
    }

    let mut sizes = vec![0; k];
    for &c in &assignment {
        sizes[c] += 1;
    }
    ClusterModel {
        centers: centers.to_matrix(),
        assignment,
        sizes,
        inertia: dists.iter().sum(),
        inertia_history: history,
        iterations,
    }
}

fn plus_plus_init(rows: &Rows, k: usize, rng: &mut ChaCha8Rng) -> Rows {
    let n = rows.len();
    let d = rows.dim();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut closest: Vec<f64> = (0..n).map(|i| sq_dist(rows.row(i), rows.row(chosen[0]))).collect();

    while chosen.len() < k {
        let potential: f64 = closest.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let candidate = if potential > 0.0 {
                let target = rng.random::<f64>() * potential;
                let mut acc = 0.0;
                let mut pick = n - 1;
                for (i, &w) in closest.iter().enumerate() {
                    acc += w;
                    if acc > target {
                        pick = i;
                        break;
                    }
                }
                pick
            } else {
                rng.random_range(0..n)
            };
            let updated: Vec<f64> = (0..n)
                .map(|i| closest[i].min(sq_dist(rows.row(i), rows.row(candidate))))
                .collect();
            let score: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
                best = Some((score, candidate, updated));
            }
        }
        let (_, pick, updated) = best.expect("at least one trial");
        chosen.push(pick);
        closest = updated;
    }

    let mut data = Vec::with_capacity(k * d);
    for &c in &chosen {
        data.extend_from_slice(rows.row(c));
    }
    Rows::from_vec(data, k, d)
}

fn nearest(row: &[f64], centers: &Rows) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.len() {
        let dist = sq_dist(row, centers.row(c));
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}

fn assign(rows: &Rows, centers: &Rows) -> (Vec<usize>, Vec<f64>) {
    (0..rows.len()).map(|i| nearest(rows.row(i), centers)).unzip()
}

/// Nearest-centre assignment in which every cluster keeps at least one row.
fn assign_with_repair(rows: &Rows, centers: &mut Rows) -> (Vec<usize>, Vec<f64>) {
    let k = centers.len();
    let (mut assignment, mut dists) = assign(rows, centers);
    loop {
        let mut sizes = vec![0usize; k];
        for &c in &assignment {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return (assignment, dists);
        };
        let (far, far_dist) = dists
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if far_dist > 0.0 {
            centers.row_mut(empty).copy_from_slice(rows.row(far));
            (assignment, dists) = assign(rows, centers);
            continue;
        }
        // Every row sits on a centre: fewer distinct rows than clusters.
        let largest = (0..k).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap();
        let victim = (0..rows.len()).rev().find(|&i| assignment[i] == largest).unwrap();
        centers.row_mut(empty).copy_from_slice(rows.row(victim));
        assignment[victim] = empty;
        dists[victim] = 0.0;
    }
}

fn means(rows: &Rows, assignment: &[usize], previous: &Rows) -> Rows {
    let k = previous.len();
    let d = rows.dim();
    let mut sums = vec![0.0; k * d];
    let mut counts = vec![0usize; k];
    for (i, &c) in assignment.iter().enumerate() {
        counts[c] += 1;
        for (s, v) in sums[c * d..(c + 1) * d].iter_mut().zip(rows.row(i)) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            sums[c * d..(c + 1) * d].copy_from_slice(previous.row(c));
        } else {
            for s in &mut sums[c * d..(c + 1) * d] {
                *s /= counts[c] as f64;
            }
        }
    }
    Rows::from_vec(sums, k, d)
}
