//! Pairwise-cluster interpolation quotas and synthetic row generation.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid_param, Error, Result};

/// Synthetic-row quota and interpolation weights for one cluster pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairQuota {
    pub p: usize,
    pub q: usize,
    pub quota: usize,
    /// Weight of the row drawn from cluster `p`: `n_p / (n_p + n_q)`.
    pub delta: f64,
    /// Weight of the row drawn from cluster `q`: `1 - delta`.
    pub gamma: f64,
}

/// Generation plan over all cluster pairs `p < q`, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct KmfosPlan {
    pub sizes: Vec<usize>,
    pub pairs: Vec<PairQuota>,
    /// Rows to generate: clean count minus defective count.
    pub total: usize,
}

/// Distributes `N = n_clean - n_defective` synthetic rows over cluster pairs.
///
/// The pair `(p, q)` receives `(n_p + n_q) * N / ((k - 1) * n_defective)`
/// rows. Since the pairwise sums `n_p + n_q` total `(k - 1) * n_defective`,
/// the exact shares add up to `N`; integer quotas are the floors plus one
/// extra row for the pairs with the largest remainders (ties go to the
/// lexicographically first pair).
pub fn kmfos_plan(sizes: &[usize], n_clean: usize, n_defective: usize) -> Result<KmfosPlan> {
    let k = sizes.len();
    if k < 2 {
        return Err(invalid_param("k", format!("need at least 2 clusters, got {k}")));
    }
    if sizes.contains(&0) {
        return Err(invalid_param("sizes", "every cluster needs at least one member"));
    }
    if sizes.iter().sum::<usize>() != n_defective {
        return Err(invalid_param(
            "sizes",
            format!("cluster sizes sum to {}, expected {n_defective}", sizes.iter().sum::<usize>()),
        ));
    }
    if n_clean < n_defective {
        return Err(Error::InvalidData(format!(
            "defective rows ({n_defective}) outnumber clean rows ({n_clean})"
        )));
    }

    let total = n_clean - n_defective;
    let denom = ((k - 1) * n_defective) as u128;
    let mut pairs = Vec::with_capacity(k * (k - 1) / 2);
    let mut remainders = Vec::with_capacity(pairs.capacity());
    for p in 0..k {
        for q in p + 1..k {
            let joint = sizes[p] + sizes[q];
            let numer = joint as u128 * total as u128;
            let delta = sizes[p] as f64 / joint as f64;
            pairs.push(PairQuota {
                p,
                q,
                quota: (numer / denom) as usize,
                delta,
                gamma: 1.0 - delta,
            });
            remainders.push(numer % denom);
        }
    }

    let assigned: usize = pairs.iter().map(|pq| pq.quota).sum();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    // Stable sort keeps lexicographic pair order among equal remainders.
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]));
    for &i in order.iter().take(total - assigned) {
        pairs[i].quota += 1;
    }

    Ok(KmfosPlan {
        sizes: sizes.to_vec(),
        pairs,
        total,
    })
}

/// Generates `plan.total` synthetic minority rows.
///
/// `minority` holds the clustered rows and `assignment` their cluster. For
/// each pair, rows `i` from cluster `p` and `j` from cluster `q` are drawn
/// uniformly with replacement and combined as `delta * i + gamma * j`.
/// Output rows are grouped by pair in plan order.
pub fn kmfos_generate(
    minority: &DMatrix<f64>,
    assignment: &[usize],
    plan: &KmfosPlan,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if assignment.len() != minority.nrows() {
        return Err(Error::DimensionMismatch {
            expected: minority.nrows(),
            actual: assignment.len(),
        });
    }
    let k = plan.sizes.len();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in assignment.iter().enumerate() {
        if c >= k {
            return Err(invalid_param("assignment", format!("cluster {c} out of range")));
        }
        groups[c].push(i);
    }
    let actual: Vec<usize> = groups.iter().map(Vec::len).collect();
    if actual != plan.sizes {
        return Err(invalid_param(
            "plan",
            format!("plan sizes {:?} differ from cluster sizes {actual:?}", plan.sizes),
        ));
    }

    let m = minority.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(plan.total, m);
    let mut row = 0;
    for pair in &plan.pairs {
        let (from_p, from_q) = (&groups[pair.p], &groups[pair.q]);
        for _ in 0..pair.quota {
            let i = from_p[rng.random_range(0..from_p.len())];
            let j = from_q[rng.random_range(0..from_q.len())];
            for col in 0..m {
                let a = minority[(i, col)];
                let b = minority[(j, col)];
                let r = pair.delta * a + pair.gamma * b;
                // Rounding may step one ulp past the segment end.
                out[(row, col)] = r.clamp(a.min(b), a.max(b));
            }
            row += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quotas(plan: &KmfosPlan) -> Vec<(usize, usize, usize)> {
        plan.pairs.iter().map(|p| (p.p, p.q, p.quota)).collect()
    }

    #[test]
    fn two_equal_clusters() {
        let plan = kmfos_plan(&[2, 2], 10, 4).unwrap();
        assert_eq!(plan.total, 6);
        assert_eq!(quotas(&plan), vec![(0, 1, 6)]);
        assert_eq!(plan.pairs[0].delta, 0.5);
        assert_eq!(plan.pairs[0].gamma, 0.5);
    }

    #[test]
    fn three_clusters_direct_arithmetic() {
        let plan = kmfos_plan(&[5, 3, 2], 30, 10).unwrap();
        assert_eq!(plan.total, 20);
        assert_eq!(quotas(&plan), vec![(0, 1, 8), (0, 2, 7), (1, 2, 5)]);
    }

    #[test]
    fn remainder_goes_to_largest_fraction_then_first_pair() {
        // N = 1 and every pair's exact share is 1/3: the first pair wins.
        let plan = kmfos_plan(&[1, 1, 1], 4, 3).unwrap();
        assert_eq!(quotas(&plan), vec![(0, 1, 1), (0, 2, 0), (1, 2, 0)]);
        // N = 1 with shares 7/18, 6/18 and 5/18.
        let plan = kmfos_plan(&[4, 3, 2], 10, 9).unwrap();
        assert_eq!(quotas(&plan), vec![(0, 1, 1), (0, 2, 0), (1, 2, 0)]);
    }

    #[test]
    fn balanced_input_needs_no_rows() {
        let plan = kmfos_plan(&[3, 2], 5, 5).unwrap();
        assert_eq!(plan.total, 0);
        assert!(plan.pairs.iter().all(|p| p.quota == 0));
    }

    #[test]
    fn plan_errors() {
        assert!(kmfos_plan(&[4], 10, 4).is_err());
        assert!(kmfos_plan(&[4, 0], 10, 4).is_err());
        assert!(kmfos_plan(&[2, 2], 10, 5).is_err());
        assert!(kmfos_plan(&[2, 2], 3, 4).is_err());
    }

    #[test]
    fn weighted_interpolation_point() {
        let minority = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let assignment = [0, 0, 0, 1];
        let plan = kmfos_plan(&[3, 1], 5, 4).unwrap();
        assert_eq!(plan.pairs[0].delta, 0.75);
        assert_eq!(plan.pairs[0].gamma, 0.25);
        let out = kmfos_generate(&minority, &assignment, &plan, 1).unwrap();
        assert_eq!(out.nrows(), 1);
        assert_eq!(out.row(0).iter().copied().collect::<Vec<_>>(), vec![0.25, 0.25]);
    }

    #[test]
    fn equal_sizes_give_midpoints() {
        let minority = DMatrix::from_row_slice(2, 1, &[2.0, 6.0]);
        let plan = kmfos_plan(&[1, 1], 7, 2).unwrap();
        let out = kmfos_generate(&minority, &[0, 1], &plan, 3).unwrap();
        assert_eq!(out.nrows(), 5);
        assert!(out.iter().all(|&v| v == 4.0));
    }

    #[test]
    fn mismatched_plan_is_rejected() {
        let minority = DMatrix::from_row_slice(2, 1, &[2.0, 6.0]);
        let plan = kmfos_plan(&[1, 1], 7, 2).unwrap();
        assert!(kmfos_generate(&minority, &[0, 0], &plan, 3).is_err());
    }
}
