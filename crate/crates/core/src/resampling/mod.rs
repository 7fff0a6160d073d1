//! KMFOS: cluster the defective rows, interpolate new ones between cluster
//! pairs until the classes balance, then drop CLNI-flagged noise.

mod clni;
mod kmeans;
mod plan;

pub use clni::{clni_filter, clni_filter_passes, FilterReport};
pub use kmeans::{kmeans, ClusterModel};
pub use plan::{kmfos_generate, kmfos_plan, KmfosPlan, PairQuota};

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{select_rows, Dataset, DEFECTIVE};
use crate::error::{invalid_param, Error, Result};

/// Knobs of one oversampling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmfosParams {
    /// Clusters for the defective rows.
    pub k: usize,
    /// Neighbours consulted by the noise filter.
    pub kn: usize,
    pub seed: u64,
    pub clni_passes: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
}

impl KmfosParams {
    pub fn new(k: usize, kn: usize, seed: u64) -> Self {
        Self {
            k,
            kn,
            seed,
            clni_passes: 1,
            kmeans_max_iter: 300,
            kmeans_tol: 1e-6,
        }
    }
}

/// Oversampled dataset plus the intermediate artefacts of the run.
#[derive(Debug, Clone)]
pub struct Oversampled {
    pub dataset: Dataset,
    pub clusters: ClusterModel,
    pub plan: KmfosPlan,
    /// `[clean, defective]` counts after generation, before filtering.
    pub pre_filter_counts: [usize; 2],
    /// Filter outcome over the original rows followed by the synthetic ones.
    pub filter: FilterReport,
}

impl Oversampled {
    pub fn n_synthetic(&self) -> usize {
        self.plan.total
    }
}

/// Runs the full KMFOS pipeline on `data`.
///
/// Output rows are the surviving original rows in input order followed by
/// the surviving synthetic rows.
pub fn kmfos_oversample(data: &Dataset, params: &KmfosParams) -> Result<Oversampled> {
    let [n_clean, n_defective] = data.class_counts();
    if n_defective == 0 {
        return Err(Error::MissingClass(DEFECTIVE));
    }
    if n_clean == 0 {
        return Err(Error::MissingClass(0));
    }
    if params.k < 2 {
        return Err(invalid_param("k", format!("need at least 2 clusters, got {}", params.k)));
    }
    if params.k > n_defective {
        return Err(invalid_param(
            "k",
            format!("{} clusters exceed {n_defective} defective rows", params.k),
        ));
    }
    if n_clean < n_defective {
        return Err(Error::InvalidData(format!(
            "defective rows ({n_defective}) outnumber clean rows ({n_clean})"
        )));
    }

    let mut seeds = ChaCha8Rng::seed_from_u64(params.seed);
    let cluster_seed = seeds.next_u64();
    let sample_seed = seeds.next_u64();

    let defective_idx: Vec<usize> = (0..data.n_samples())
        .filter(|&i| data.labels()[i] == DEFECTIVE)
        .collect();
    let minority = select_rows(data.features(), &defective_idx);
    let clusters = kmeans(
        &minority,
        params.k,
        cluster_seed,
        params.kmeans_max_iter,
        params.kmeans_tol,
    )?;
    let plan = kmfos_plan(&clusters.sizes, n_clean, n_defective)?;
    let synthetic = kmfos_generate(&minority, &clusters.assignment, &plan, sample_seed)?;

    let n = data.n_samples();
    let m = data.n_features();
    let total = n + synthetic.nrows();
    let x = data.features();
    let combined = DMatrix::from_fn(total, m, |i, j| {
        if i < n {
            x[(i, j)]
        } else {
            synthetic[(i - n, j)]
        }
    });
    let mut labels = data.labels().to_vec();
    labels.resize(total, DEFECTIVE);
    let pre_filter_counts = crate::dataset::class_counts(&labels);

    let filter = clni_filter_passes(&combined, &labels, params.kn, params.clni_passes)?;
    let kept = filter.kept_indices();
    let features = select_rows(&combined, &kept);
    let kept_labels = kept.iter().map(|&i| labels[i]).collect();
    let dataset = Dataset::new(
        data.name(),
        data.feature_names().to_vec(),
        features,
        kept_labels,
    )?;

    Ok(Oversampled {
        dataset,
        clusters,
        plan,
        pre_filter_counts,
        filter,
    })
}
