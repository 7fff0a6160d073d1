//! Mean/std tables over run records.
//!
//! One table per dataset: rows are classifiers, columns are metric ×
//! condition. Oversampled cells pool every fold and grid setting; a
//! companion table breaks them down per `(k, kn)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use sdp_core::metrics::{aggregate, MetricSummary};

use crate::config::ClassifierKind;
use crate::error::{BenchError, Result};
use crate::runner::{Condition, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Recall,
    BalancedAccuracy,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Recall, Metric::BalancedAccuracy];

    pub fn key(self) -> &'static str {
        match self {
            Metric::Recall => "recall",
            Metric::BalancedAccuracy => "balanced_accuracy",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Metric::Recall => "Recall",
            Metric::BalancedAccuracy => "Balanced accuracy",
        }
    }

    pub fn of(self, r: &RunRecord) -> f64 {
        match self {
            Metric::Recall => r.recall,
            Metric::BalancedAccuracy => r.balanced_accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub dataset: String,
    pub classifiers: Vec<ClassifierKind>,
    pub conditions: Vec<Condition>,
    pub cells: BTreeMap<(ClassifierKind, Metric, Condition), MetricSummary>,
}

impl ReportTable {
    pub fn cell(&self, c: ClassifierKind, m: Metric, cond: Condition) -> Option<&MetricSummary> {
        self.cells.get(&(c, m, cond))
    }
}

/// Oversampled results of one grid setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingRow {
    pub dataset: String,
    pub classifier: ClassifierKind,
    pub k: usize,
    pub kn: usize,
    pub metric: Metric,
    pub summary: MetricSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tables: Vec<ReportTable>,
    pub settings: Vec<SettingRow>,
}

pub fn render_report(records: &[RunRecord]) -> Result<Report> {
    if records.is_empty() {
        return Err(BenchError::Data("no records to report".into()));
    }
    let all: BTreeSet<ClassifierKind> = records.iter().map(|r| r.classifier).collect();
    let mut groups: BTreeMap<(&str, Condition), BTreeSet<ClassifierKind>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.dataset, r.condition)).or_default().insert(r.classifier);
    }
    for ((dataset, condition), set) in &groups {
        if *set != all {
            let missing: Vec<&str> = all.difference(set).map(|c| c.key()).collect();
            return Err(BenchError::Data(format!(
                "inconsistent classifier sets: {dataset}/{condition} has no records for {}",
                missing.join(", ")
            )));
        }
    }

    let datasets: Vec<&str> = {
        let mut seen = Vec::new();
        for r in records {
            if !seen.contains(&r.dataset.as_str()) {
                seen.push(r.dataset.as_str());
            }
        }
        seen
    };
    let summarize = |values: Vec<f64>| aggregate(&values).expect("non-empty group");

    let mut tables = Vec::new();
    let mut settings = Vec::new();
    for dataset in datasets {
        let rows: Vec<&RunRecord> = records.iter().filter(|r| r.dataset == dataset).collect();
        let conditions: Vec<Condition> =
            rows.iter().map(|r| r.condition).collect::<BTreeSet<_>>().into_iter().collect();
        let mut cells = BTreeMap::new();
        for &c in &all {
            for m in Metric::ALL {
                for &cond in &conditions {
                    let values: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.classifier == c && r.condition == cond)
                        .map(|r| m.of(r))
                        .collect();
                    cells.insert((c, m, cond), summarize(values));
                }
            }
        }
        let grid: BTreeSet<(usize, usize)> = rows
            .iter()
            .filter_map(|r| r.k.zip(r.kn).filter(|_| r.condition == Condition::Oversampled))
            .collect();
        for &c in &all {
            for &(k, kn) in &grid {
                for m in Metric::ALL {
                    let values: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.classifier == c && r.condition == Condition::Oversampled)
                        .filter(|r| r.k == Some(k) && r.kn == Some(kn))
                        .map(|r| m.of(r))
                        .collect();
                    if !values.is_empty() {
                        settings.push(SettingRow {
                            dataset: dataset.to_string(),
                            classifier: c,
                            k,
                            kn,
                            metric: m,
                            summary: summarize(values),
                        });
                    }
                }
            }
        }
        tables.push(ReportTable {
            dataset: dataset.to_string(),
            classifiers: all.iter().copied().collect(),
            conditions,
            cells,
        });
    }
    Ok(Report { tables, settings })
}

fn cell_text(s: &MetricSummary) -> String {
    format!("μ = {:.3} σ = {:.3}", s.mean, s.std)
}

impl Report {
    /// Pooled cells, one per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("dataset\tclassifier\tmetric\tcondition\tmean\tstd\tcount\n");
        for t in &self.tables {
            for ((c, m, cond), s) in &t.cells {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    t.dataset,
                    c.key(),
                    m.key(),
                    cond.key(),
                    s.mean,
                    s.std,
                    s.count
                );
            }
        }
        out
    }

    pub fn settings_tsv(&self) -> String {
        let mut out = String::from("dataset\tclassifier\tk\tkn\tmetric\tmean\tstd\tcount\n");
        for r in &self.settings {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.dataset,
                r.classifier.key(),
                r.k,
                r.kn,
                r.metric.key(),
                r.summary.mean,
                r.summary.std,
                r.summary.count
            );
        }
        out
    }

    /// Fixed-width tables for reading in a terminal.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tables {
            let mut header = vec!["Classifier".to_string()];
            for m in Metric::ALL {
                for cond in &t.conditions {
                    header.push(format!("{} ({})", m.title(), cond.key()));
                }
            }
            let mut rows = vec![header];
            for &c in &t.classifiers {
                let mut row = vec![c.display_name().to_string()];
                for m in Metric::ALL {
                    for &cond in &t.conditions {
                        row.push(t.cell(c, m, cond).map(cell_text).unwrap_or_else(|| "-".into()));
                    }
                }
                rows.push(row);
            }
            let widths: Vec<usize> = (0..rows[0].len())
                .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
                .collect();
            let _ = writeln!(out, "{}", t.dataset);
            for (i, row) in rows.iter().enumerate() {
                let cells: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .map(|(s, &w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
                    .collect();
                let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
                if i == 0 {
                    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
                    let _ = writeln!(out, "{}", rule.join("-+-"));
                }
            }
            out.push('\n');
        }
        out
    }
}
