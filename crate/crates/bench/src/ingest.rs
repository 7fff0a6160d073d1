use sdp_core::dataset::{parse_arff, parse_csv, Dataset, DefectiveTokens};

use crate::config::{DataFormat, DatasetEntry, ExperimentConfig};
use crate::error::{BenchError, Result};

/// Reads and parses one configured dataset; the result carries the entry name.
pub fn load_dataset(cfg: &ExperimentConfig, entry: &DatasetEntry) -> Result<Dataset> {
    let path = cfg.dataset_path(entry);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| BenchError::Data(format!("cannot read {}: {e}", path.display())))?;
    let tokens = DefectiveTokens::new(entry.defective_tokens.iter().cloned());
    let parsed = match entry.format {
        DataFormat::Arff => parse_arff(&text, &tokens),
        DataFormat::Csv => parse_csv(&text, entry.label_column.as_deref().unwrap_or("label"), &tokens),
    };
    parsed
        .map(|d| d.with_name(entry.name.clone()))
        .map_err(|e| BenchError::Data(format!("{}: {e}", path.display())))
}
