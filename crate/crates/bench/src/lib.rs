//! Benchmark harness: fetch datasets, run the original and oversampled
//! cross-validation protocols, and render mean/std tables.

pub mod config;
pub mod error;
pub mod fetch;
pub mod ingest;
pub mod records;
pub mod report;
pub mod runner;
pub mod scatter;
pub mod seeds;

use std::fs;
use std::path::{Path, PathBuf};

pub use config::{load_config, ClassifierKind, ExperimentConfig, Protocol};
pub use error::{BenchError, Result};
pub use runner::{run_original, run_oversampled, Condition, RunOutput, RunRecord};

use error::io_error;

/// Runs the selected protocols on every configured dataset, or only on
/// `only` when given. Pinned checksums are verified before a file is read.
pub fn run_experiment(cfg: &ExperimentConfig, protocol: Protocol, only: Option<&str>) -> Result<RunOutput> {
    if let Some(name) = only {
        if cfg.dataset(name).is_none() {
            return Err(BenchError::Config(format!("dataset `{name}` is not configured")));
        }
    }
    let mut out = RunOutput::default();
    for entry in cfg.datasets.iter().filter(|d| only.is_none_or(|n| n == d.name)) {
        fetch::verify_dataset(cfg, entry)?;
        let data = ingest::load_dataset(cfg, entry)?;
        if protocol.includes_original() {
            out.extend(run_original(cfg, &data)?);
        }
        if protocol.includes_oversampled() {
            out.extend(run_oversampled(cfg, &data)?);
        }
    }
    out.sort();
    Ok(out)
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

/// Writes `records.csv`, `skipped.csv`, `timings.csv` and
/// `oversampling.csv` into `dir`.
pub fn write_run(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    Ok(vec![
        write(dir.join("records.csv"), &records::records_to_csv(&out.records))?,
        write(dir.join("skipped.csv"), &records::skipped_to_csv(&out.skipped))?,
        write(dir.join("timings.csv"), &records::timings_to_csv(&out.timings))?,
        write(dir.join("oversampling.csv"), &records::oversampling_to_csv(&out.oversampling))?,
    ])
}

/// Writes `report.tsv`, `report.txt`, `report_by_setting.tsv` and the raw
/// `report_records.csv` into `dir`.
pub fn write_report(report: &report::Report, records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    Ok(vec![
        write(dir.join("report.tsv"), &report.to_tsv())?,
        write(dir.join("report.txt"), &report.to_text())?,
        write(dir.join("report_by_setting.tsv"), &report.settings_tsv())?,
        write(dir.join("report_records.csv"), &records::records_to_csv(records))?,
    ])
}
