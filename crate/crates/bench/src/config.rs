//! Experiment configuration: JSON schema, defaults and validation.
//!
//! Relative paths are resolved against the directory holding the config
//! file (`data_dir`, `output_dir`) and dataset paths against `data_dir`.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use sdp_core::baselines::{ForestConfig, LogRegConfig, SvmConfig};
use sdp_core::oselm::OselmSchedule;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Original,
    Oversampled,
    #[default]
    Both,
}

impl Protocol {
    pub fn includes_original(self) -> bool {
        matches!(self, Protocol::Original | Protocol::Both)
    }

    pub fn includes_oversampled(self) -> bool {
        matches!(self, Protocol::Oversampled | Protocol::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    Logreg,
    Rf,
    Gnb,
    Oselm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Svm,
        ClassifierKind::Logreg,
        ClassifierKind::Rf,
        ClassifierKind::Gnb,
        ClassifierKind::Oselm,
    ];

    /// Name used in record files and config.
    pub fn key(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Logreg => "logreg",
            ClassifierKind::Rf => "rf",
            ClassifierKind::Gnb => "gnb",
            ClassifierKind::Oselm => "oselm",
        }
    }

    /// Row label in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Logreg => "Logistic Regression",
            ClassifierKind::Rf => "Random Forest",
            ClassifierKind::Gnb => "Naive Bayes",
            ClassifierKind::Oselm => "OS-ELM",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.key() == key)
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Arff,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    /// File name, relative to `data_dir` unless absolute.
    pub path: PathBuf,
    /// Download source used by `fetch`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    /// Expected lowercase hex SHA-256 of the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    pub format: DataFormat,
    #[serde(default = "default_tokens")]
    pub defective_tokens: Vec<String>,
    /// Label column of CSV files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default = "default_k")]
    pub k: Vec<usize>,
    #[serde(default = "default_kn")]
    pub kn: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            k: default_k(),
            kn: default_kn(),
        }
    }
}

impl Grid {
    /// All `(k, kn)` cells, k-major.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        self.k
            .iter()
            .flat_map(|&k| self.kn.iter().map(move |&kn| (k, kn)))
            .collect()
    }
}

/// Setting used by the `after` scatter mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSetting {
    pub k: usize,
    pub kn: usize,
}

impl Default for ScatterSetting {
    fn default() -> Self {
        Self { k: 5, kn: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogRegSettings {
    pub l2: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogRegSettings {
    fn default() -> Self {
        let d = LogRegConfig::default();
        Self {
            l2: d.l2,
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmSettings {
    pub c: f64,
    /// `null` selects `1 / m`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SvmSettings {
    fn default() -> Self {
        let d = SvmConfig::default();
        Self {
            c: d.c,
            gamma: d.gamma,
            tol: d.tol,
            max_passes: d.max_passes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestSettings {
    pub n_trees: usize,
}

impl Default for ForestSettings {
    fn default() -> Self {
        Self {
            n_trees: ForestConfig::default().n_trees,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OselmSettings {
    pub hidden_ratio: f64,
    pub init_ratio: f64,
    pub chunk: usize,
    pub ridge: f64,
}

impl Default for OselmSettings {
    fn default() -> Self {
        let d = OselmSchedule::default();
        Self {
            hidden_ratio: d.hidden_ratio,
            init_ratio: d.init_ratio,
            chunk: d.chunk,
            ridge: d.ridge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparameters {
    pub logreg: LogRegSettings,
    pub svm: SvmSettings,
    pub rf: ForestSettings,
    pub oselm: OselmSettings,
}

impl Hyperparameters {
    pub fn logreg(&self) -> LogRegConfig {
        LogRegConfig {
            l2: self.logreg.l2,
            tol: self.logreg.tol,
            max_iter: self.logreg.max_iter,
        }
    }

    pub fn svm(&self) -> SvmConfig {
        SvmConfig {
            c: self.svm.c,
            gamma: self.svm.gamma,
            tol: self.svm.tol,
            max_passes: self.svm.max_passes,
            ..SvmConfig::default()
        }
    }

    pub fn forest(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.rf.n_trees,
            ..ForestConfig::default()
        }
    }

    pub fn oselm(&self) -> OselmSchedule {
        OselmSchedule {
            hidden_ratio: self.oselm.hidden_ratio,
            init_ratio: self.oselm.init_ratio,
            chunk: self.oselm.chunk,
            ridge: self.oselm.ridge,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetEntry>,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default = "default_folds_original")]
    pub folds_original: usize,
    #[serde(default = "default_folds_oversampled")]
    pub folds_oversampled: usize,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default = "default_variance_target")]
    pub variance_target: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_classifiers")]
    pub classifiers: Vec<ClassifierKind>,
    #[serde(default = "default_data_dir")]
    pub data_dir: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Fill the `wall_secs` record column. Off by default, since timings
    /// make record files differ between otherwise identical runs.
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default = "default_clni_passes")]
    pub clni_passes: usize,
    #[serde(default)]
    pub scatter: ScatterSetting,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    /// Directory the relative paths hang off; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_tokens() -> Vec<String> {
    vec!["Y".into(), "true".into(), "1".into()]
}
fn default_k() -> Vec<usize> {
    vec![3, 5, 20, 50]
}
fn default_kn() -> Vec<usize> {
    vec![5, 15, 20]
}
fn default_folds_original() -> usize {
    5
}
fn default_folds_oversampled() -> usize {
    10
}
fn default_variance_target() -> f64 {
    0.90
}
fn default_seed() -> u64 {
    42
}
fn default_classifiers() -> Vec<ClassifierKind> {
    ClassifierKind::ALL.to_vec()
}
fn default_data_dir() -> PathBuf {
    PathBuf::from("data")
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_clni_passes() -> usize {
    1
}

impl ExperimentConfig {
    /// Parses and validates config JSON. Relative paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            BenchError::Config(format!("{path}: {}", e.inner()))
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(BenchError::Config(format!("{field}: {msg}")));
        if self.datasets.is_empty() {
            return fail("datasets", "at least one dataset is required".into());
        }
        let mut names = HashSet::new();
        let mut paths = HashSet::new();
        for (i, d) in self.datasets.iter().enumerate() {
            if d.name.trim().is_empty() {
                return fail(&format!("datasets[{i}].name"), "must not be empty".into());
            }
            if !names.insert(d.name.as_str()) {
                return fail(&format!("datasets[{i}].name"), format!("duplicate name `{}`", d.name));
            }
            if !paths.insert(self.dataset_path(d)) {
                return fail(&format!("datasets[{i}].path"), format!("duplicate path `{}`", d.path.display()));
            }
            if let Some(sha) = &d.sha256 {
                if sha.len() != 64 || !sha.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
                    return fail(&format!("datasets[{i}].sha256"), "expected 64 lowercase hex digits".into());
                }
            }
            if d.defective_tokens.is_empty() {
                return fail(&format!("datasets[{i}].defective_tokens"), "must not be empty".into());
            }
            if d.format == DataFormat::Csv && d.label_column.is_none() {
                return fail(&format!("datasets[{i}].label_column"), "required for csv datasets".into());
            }
        }
        if self.folds_original < 2 {
            return fail("folds_original", format!("must be at least 2, got {}", self.folds_original));
        }
        if self.folds_oversampled < 2 {
            return fail("folds_oversampled", format!("must be at least 2, got {}", self.folds_oversampled));
        }
        if self.grid.k.is_empty() {
            return fail("grid.k", "must not be empty".into());
        }
        if let Some(k) = self.grid.k.iter().find(|&&k| k < 2) {
            return fail("grid.k", format!("every k must be at least 2, got {k}"));
        }
        if self.grid.kn.is_empty() {
            return fail("grid.kn", "must not be empty".into());
        }
        if self.grid.kn.contains(&0) {
            return fail("grid.kn", "every kn must be at least 1".into());
        }
        if !(self.variance_target > 0.0 && self.variance_target <= 1.0) {
            return fail("variance_target", format!("must lie in (0, 1], got {}", self.variance_target));
        }
        if self.classifiers.is_empty() {
            return fail("classifiers", "must not be empty".into());
        }
        let unique: HashSet<_> = self.classifiers.iter().collect();
        if unique.len() != self.classifiers.len() {
            return fail("classifiers", "duplicate entry".into());
        }
        if self.clni_passes == 0 {
            return fail("clni_passes", "must be at least 1".into());
        }
        if self.scatter.k < 2 || self.scatter.kn < 1 {
            return fail("scatter", "k must be at least 2 and kn at least 1".into());
        }
        let h = &self.hyperparameters;
        if !(h.logreg.l2 >= 0.0) || !(h.logreg.tol > 0.0) {
            return fail("hyperparameters.logreg", "l2 must be non-negative and tol positive".into());
        }
        if !(h.svm.c > 0.0) || !(h.svm.tol > 0.0) || h.svm.gamma.is_some_and(|g| !(g > 0.0)) {
            return fail("hyperparameters.svm", "c, tol and gamma must be positive".into());
        }
        if h.rf.n_trees == 0 {
            return fail("hyperparameters.rf.n_trees", "must be at least 1".into());
        }
        if !(h.oselm.hidden_ratio > 0.0) || !(h.oselm.init_ratio >= 1.0) || h.oselm.chunk == 0 || !(h.oselm.ridge >= 0.0) {
            return fail(
                "hyperparameters.oselm",
                "hidden_ratio must be positive, init_ratio at least 1, chunk at least 1, ridge non-negative".into(),
            );
        }
        Ok(())
    }

    pub fn data_dir(&self) -> PathBuf {
        self.base_dir.join(&self.data_dir)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.output_dir)
    }

    pub fn dataset_path(&self, entry: &DatasetEntry) -> PathBuf {
        self.data_dir().join(&entry.path)
    }

    pub fn dataset(&self, name: &str) -> Option<&DatasetEntry> {
        self.datasets.iter().find(|d| d.name == name)
    }
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    ExperimentConfig::from_json(&text, base)
}
