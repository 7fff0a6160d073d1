//! Two-component projections of a dataset before and after oversampling,
//! and oversampled exports in the original feature space.

use std::fmt::Write as _;

use sdp_core::dataset::{write_csv, Dataset, Preprocessor};
use sdp_core::resampling::{kmfos_oversample, FilterReport, KmfosParams};

use crate::config::ExperimentConfig;
use crate::error::{BenchError, Result};
use crate::seeds::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatterMode {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scatter {
    /// `pc1,pc2,label,source` rows.
    pub csv: String,
    pub rows: usize,
    pub label_counts: [usize; 2],
    /// Counts right before filtering, after mode only.
    pub pre_filter_counts: Option<[usize; 2]>,
    pub filter: Option<FilterReport>,
}

fn core_err(name: &str, e: sdp_core::Error) -> BenchError {
    BenchError::Data(format!("{name}: {e}"))
}

/// PCA is fit on the whole dataset; after mode oversamples in the reduced
/// space with the configured `scatter` setting.
pub fn emit_scatter(data: &Dataset, cfg: &ExperimentConfig, mode: ScatterMode) -> Result<Scatter> {
    let name = data.name();
    let pre = Preprocessor::fit(data.features(), cfg.variance_target).map_err(|e| core_err(name, e))?;
    if pre.n_components() < 2 {
        return Err(BenchError::Data(format!(
            "{name}: PCA kept {} component(s), a scatter needs 2",
            pre.n_components()
        )));
    }
    let z = pre.transform(data.features()).map_err(|e| core_err(name, e))?;
    let reduced = Dataset::from_matrix(name, z, data.labels().to_vec()).map_err(|e| core_err(name, e))?;

    let n = data.n_samples();
    let (points, sources, pre_filter_counts, filter) = match mode {
        ScatterMode::Before => (reduced, vec!["original"; n], None, None),
        ScatterMode::After => {
            let s = cfg.scatter;
            let mut params =
                KmfosParams::new(s.k, s.kn, derive_seed(cfg.seed, name, None, Some((s.k, s.kn)), "scatter"));
            params.clni_passes = cfg.clni_passes;
            let over = kmfos_oversample(&reduced, &params).map_err(|e| core_err(name, e))?;
            let sources = over
                .filter
                .kept_indices()
                .into_iter()
                .map(|i| if i < n { "original" } else { "synthetic" })
                .collect();
            (over.dataset, sources, Some(over.pre_filter_counts), Some(over.filter))
        }
    };

    let mut csv = String::from("pc1,pc2,label,source\n");
    let x = points.features();
    for (i, (&label, source)) in points.labels().iter().zip(&sources).enumerate() {
        let _ = writeln!(csv, "{:.16e},{:.16e},{label},{source}", x[(i, 0)], x[(i, 1)]);
    }
    Ok(Scatter {
        csv,
        rows: points.n_samples(),
        label_counts: points.class_counts(),
        pre_filter_counts,
        filter,
    })
}

/// Oversamples the raw features and renders the result as CSV with a
/// `defective` column of 0/1 labels.
pub fn export_oversampled(
    data: &Dataset,
    cfg: &ExperimentConfig,
    k: usize,
    kn: usize,
) -> Result<String> {
    let mut params = KmfosParams::new(k, kn, derive_seed(cfg.seed, data.name(), None, Some((k, kn)), "export"));
    params.clni_passes = cfg.clni_passes;
    let over = kmfos_oversample(data, &params).map_err(|e| core_err(data.name(), e))?;
    Ok(write_csv(&over.dataset, EXPORT_LABEL))
}

pub const EXPORT_LABEL: &str = "defective";
