//! The two cross-validation protocols.
//!
//! Original: stratified folds, standardise+PCA fit on the training folds,
//! every classifier trained on the transformed training rows.
//! Oversampled: the same, with KMFOS applied to the transformed training
//! rows once per `(k, kn)` grid cell before the classifiers are fitted.
//! Every task draws its randomness from [`derive_seed`], and outputs are
//! sorted before they are returned, so thread scheduling never shows.

use std::fmt;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use sdp_core::baselines::{gnb_fit, logreg_fit, rf_fit, svm_fit, Classifier};
use sdp_core::dataset::{select_rows, stratified_kfold, Dataset, Preprocessor};
use sdp_core::metrics::{balanced_accuracy, confusion, recall};
use sdp_core::resampling::{kmfos_oversample, KmfosParams};

use crate::config::{ClassifierKind, ExperimentConfig, Hyperparameters};
use crate::error::{BenchError, Result};
use crate::seeds::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Original,
    Oversampled,
}

impl Condition {
    pub fn key(self) -> &'static str {
        match self {
            Condition::Original => "original",
            Condition::Oversampled => "oversampled",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        match key {
            "original" => Some(Condition::Original),
            "oversampled" => Some(Condition::Oversampled),
            _ => None,
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Scores of one classifier on one held-out fold.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub dataset: String,
    pub classifier: ClassifierKind,
    pub condition: Condition,
    pub k: Option<usize>,
    pub kn: Option<usize>,
    pub fold: usize,
    pub recall: f64,
    pub balanced_accuracy: f64,
    /// Fit plus predict time, when the config asks for it.
    pub wall_secs: Option<f64>,
}

/// Identity of a record or of a task that produced none.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaskKey {
    pub dataset: String,
    pub classifier: Option<ClassifierKind>,
    pub condition: Condition,
    pub k: Option<usize>,
    pub kn: Option<usize>,
    pub fold: usize,
}

impl RunRecord {
    pub fn key(&self) -> TaskKey {
        TaskKey {
            dataset: self.dataset.clone(),
            classifier: Some(self.classifier),
            condition: self.condition,
            k: self.k,
            kn: self.kn,
            fold: self.fold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    /// `classifier` is `None` when the whole cell was skipped.
    pub key: TaskKey,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub key: TaskKey,
    pub secs: f64,
}

/// Class counts around the noise filter for one oversampled training split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OversampleStat {
    pub dataset: String,
    pub fold: usize,
    pub k: usize,
    pub kn: usize,
    /// `[clean, defective]` of the training split before oversampling.
    pub before: [usize; 2],
    pub synthetic: usize,
    /// `[clean, defective]` right before the noise filter.
    pub pre_filter: [usize; 2],
    pub removed: [usize; 2],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    pub records: Vec<RunRecord>,
    pub skipped: Vec<Skipped>,
    pub timings: Vec<Timing>,
    pub oversampling: Vec<OversampleStat>,
}

impl RunOutput {
    pub fn extend(&mut self, other: RunOutput) {
        self.records.extend(other.records);
        self.skipped.extend(other.skipped);
        self.timings.extend(other.timings);
        self.oversampling.extend(other.oversampling);
    }

    /// Puts every list in canonical key order.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| a.key().cmp(&b.key()));
        self.skipped.sort_by(|a, b| a.key.cmp(&b.key));
        self.timings.sort_by(|a, b| a.key.cmp(&b.key));
        self.oversampling.sort_by_key(|s| (s.dataset.clone(), s.k, s.kn, s.fold));
    }
}

/// Trains one classifier family and labels `x_test`.
pub fn fit_predict(
    kind: ClassifierKind,
    hyper: &Hyperparameters,
    x_train: &DMatrix<f64>,
    y_train: &[u8],
    x_test: &DMatrix<f64>,
    seed: u64,
) -> sdp_core::Result<Vec<u8>> {
    match kind {
        ClassifierKind::Svm => svm_fit(x_train, y_train, &hyper.svm())?.predict(x_test),
        ClassifierKind::Logreg => logreg_fit(x_train, y_train, &hyper.logreg())?.predict(x_test),
        ClassifierKind::Rf => rf_fit(x_train, y_train, &hyper.forest(), seed)?.predict(x_test),
        ClassifierKind::Gnb => gnb_fit(x_train, y_train)?.predict(x_test),
        ClassifierKind::Oselm => hyper.oselm().fit(x_train, y_train, seed)?.predict(x_test),
    }
}

/// Transformed training and held-out rows of one fold.
struct Split {
    fold: usize,
    train_x: DMatrix<f64>,
    train_y: Vec<u8>,
    test_x: DMatrix<f64>,
    test_y: Vec<u8>,
}

fn prepare_splits(
    cfg: &ExperimentConfig,
    data: &Dataset,
    condition: Condition,
    n_folds: usize,
    out: &mut RunOutput,
) -> Result<Vec<Split>> {
    let fold_seed = derive_seed(cfg.seed, data.name(), None, None, &format!("folds-{condition}"));
    let folds = stratified_kfold(data.labels(), n_folds, fold_seed)
        .map_err(|e| BenchError::Data(format!("{}: {e}", data.name())))?;
    let prepared: Vec<std::result::Result<Split, Skipped>> = (0..n_folds)
        .into_par_iter()
        .map(|fold| {
            let skip = |reason: String| Skipped {
                key: TaskKey {
                    dataset: data.name().to_string(),
                    classifier: None,
                    condition,
                    k: None,
                    kn: None,
                    fold,
                },
                reason,
            };
            let (train, test) = folds.split(fold);
            let train_y: Vec<u8> = train.iter().map(|&i| data.labels()[i]).collect();
            let test_y: Vec<u8> = test.iter().map(|&i| data.labels()[i]).collect();
            let counts = sdp_core::dataset::class_counts(&train_y);
            if counts.contains(&0) {
                return Err(skip(format!("training split lacks a class: {counts:?}")));
            }
            let raw_train = select_rows(data.features(), &train);
            let pre = Preprocessor::fit(&raw_train, cfg.variance_target)
                .map_err(|e| skip(format!("preprocessing failed: {e}")))?;
            let train_x = pre.transform(&raw_train).map_err(|e| skip(e.to_string()))?;
            let test_x = pre
                .transform(&select_rows(data.features(), &test))
                .map_err(|e| skip(e.to_string()))?;
            Ok(Split {
                fold,
                train_x,
                train_y,
                test_x,
                test_y,
            })
        })
        .collect();
    let mut splits = Vec::new();
    for p in prepared {
        match p {
            Ok(s) => splits.push(s),
            Err(s) => out.skipped.push(s),
        }
    }
    Ok(splits)
}

enum Outcome {
    Record(RunRecord, Timing),
    Skip(Skipped),
}

fn evaluate(
    cfg: &ExperimentConfig,
    key: TaskKey,
    kind: ClassifierKind,
    train_x: &DMatrix<f64>,
    train_y: &[u8],
    split: &Split,
) -> Outcome {
    let seed = derive_seed(
        cfg.seed,
        &key.dataset,
        Some(key.fold),
        key.k.zip(key.kn),
        kind.key(),
    );
    let start = Instant::now();
    let predicted = fit_predict(kind, &cfg.hyperparameters, train_x, train_y, &split.test_x, seed);
    let secs = start.elapsed().as_secs_f64();
    let scored = predicted.and_then(|p| {
        let cm = confusion(&split.test_y, &p)?;
        Ok((recall(&cm)?, balanced_accuracy(&cm)?))
    });
    match scored {
        Ok((r, ba)) => Outcome::Record(
            RunRecord {
                dataset: key.dataset.clone(),
                classifier: kind,
                condition: key.condition,
                k: key.k,
                kn: key.kn,
                fold: key.fold,
                recall: r,
                balanced_accuracy: ba,
                wall_secs: cfg.record_wall_time.then_some(secs),
            },
            Timing { key, secs },
        ),
        Err(e) => Outcome::Skip(Skipped {
            key,
            reason: e.to_string(),
        }),
    }
}

fn collect(outcomes: Vec<Outcome>, out: &mut RunOutput) {
    for o in outcomes {
        match o {
            Outcome::Record(r, t) => {
                out.records.push(r);
                out.timings.push(t);
            }
            Outcome::Skip(s) => out.skipped.push(s),
        }
    }
}

/// Stratified `folds_original`-fold protocol without resampling.
pub fn run_original(cfg: &ExperimentConfig, data: &Dataset) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let splits = prepare_splits(cfg, data, Condition::Original, cfg.folds_original, &mut out)?;
    let tasks: Vec<(&Split, ClassifierKind)> = splits
        .iter()
        .flat_map(|s| cfg.classifiers.iter().map(move |&c| (s, c)))
        .collect();
    let outcomes = tasks
        .into_par_iter()
        .map(|(split, kind)| {
            let key = TaskKey {
                dataset: data.name().to_string(),
                classifier: Some(kind),
                condition: Condition::Original,
                k: None,
                kn: None,
                fold: split.fold,
            };
            evaluate(cfg, key, kind, &split.train_x, &split.train_y, split)
        })
        .collect();
    collect(outcomes, &mut out);
    out.sort();
    Ok(out)
}

/// Stratified `folds_oversampled`-fold protocol with KMFOS on every
/// training split and grid cell.
pub fn run_oversampled(cfg: &ExperimentConfig, data: &Dataset) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let splits = prepare_splits(cfg, data, Condition::Oversampled, cfg.folds_oversampled, &mut out)?;
    let cells = cfg.grid.cells();
    let tasks: Vec<(&Split, (usize, usize))> = splits
        .iter()
        .flat_map(|s| cells.iter().map(move |&c| (s, c)))
        .collect();

    let results: Vec<(Vec<Outcome>, Option<OversampleStat>)> = tasks
        .into_par_iter()
        .map(|(split, (k, kn))| {
            let cell_key = TaskKey {
                dataset: data.name().to_string(),
                classifier: None,
                condition: Condition::Oversampled,
                k: Some(k),
                kn: Some(kn),
                fold: split.fold,
            };
            let skip_cell = |reason: String| {
                (
                    vec![Outcome::Skip(Skipped {
                        key: cell_key.clone(),
                        reason,
                    })],
                    None,
                )
            };
            let before = sdp_core::dataset::class_counts(&split.train_y);
            if k > before[1] {
                return skip_cell(format!(
                    "k = {k} exceeds the {} defective training rows",
                    before[1]
                ));
            }
            let train = match Dataset::from_matrix(data.name(), split.train_x.clone(), split.train_y.clone()) {
                Ok(d) => d,
                Err(e) => return skip_cell(e.to_string()),
            };
            let mut params = KmfosParams::new(
                k,
                kn,
                derive_seed(cfg.seed, data.name(), Some(split.fold), Some((k, kn)), "kmfos"),
            );
            params.clni_passes = cfg.clni_passes;
            let over = match kmfos_oversample(&train, &params) {
                Ok(o) => o,
                Err(e) => return skip_cell(format!("oversampling failed: {e}")),
            };
            let stat = OversampleStat {
                dataset: data.name().to_string(),
                fold: split.fold,
                k,
                kn,
                before,
                synthetic: over.n_synthetic(),
                pre_filter: over.pre_filter_counts,
                removed: over.filter.removed_by_class,
            };
            let counts = over.dataset.class_counts();
            if counts.contains(&0) {
                return (
                    skip_cell(format!("noise filter emptied a class: {counts:?}")).0,
                    Some(stat),
                );
            }
            let outcomes = cfg
                .classifiers
                .par_iter()
                .map(|&kind| {
                    let key = TaskKey {
                        classifier: Some(kind),
                        ..cell_key.clone()
                    };
                    evaluate(cfg, key, kind, over.dataset.features(), over.dataset.labels(), split)
                })
                .collect();
            (outcomes, Some(stat))
        })
        .collect();

    for (outcomes, stat) in results {
        collect(outcomes, &mut out);
        out.oversampling.extend(stat);
    }
    out.sort();
    Ok(out)
}
