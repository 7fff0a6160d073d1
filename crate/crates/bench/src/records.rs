//! CSV files written by a run and read back by `report`.

use crate::config::ClassifierKind;
use crate::error::{BenchError, Result};
use crate::runner::{Condition, OversampleStat, RunRecord, Skipped, TaskKey, Timing};

pub const RECORDS_HEADER: [&str; 9] = [
    "dataset",
    "classifier",
    "condition",
    "k",
    "kn",
    "fold",
    "recall",
    "balanced_accuracy",
    "wall_secs",
];

fn opt(v: Option<usize>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 fields")
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn key_fields(key: &TaskKey) -> [String; 6] {
    [
        key.dataset.clone(),
        key.classifier.map(|c| c.key().to_string()).unwrap_or_default(),
        key.condition.key().to_string(),
        opt(key.k),
        opt(key.kn),
        key.fold.to_string(),
    ]
}

/// Records as CSV. Floats use the shortest representation that reads back
/// to the same value.
pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut w = writer();
    w.write_record(RECORDS_HEADER).expect("in-memory write");
    for r in records {
        let mut row = key_fields(&r.key()).to_vec();
        row.push(r.recall.to_string());
        row.push(r.balanced_accuracy.to_string());
        row.push(r.wall_secs.map(|s| format!("{s:.6}")).unwrap_or_default());
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

pub fn records_from_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| BenchError::Data(format!("records header: {e}")))?
        .clone();
    if header.iter().collect::<Vec<_>>() != RECORDS_HEADER {
        return Err(BenchError::Data(format!(
            "records header must be `{}`",
            RECORDS_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| BenchError::Data(format!("records line {line}: {e}")))?;
        let bad = |what: &str| BenchError::Data(format!("records line {line}: bad {what}"));
        let opt_usize = |s: &str, what: &str| -> Result<Option<usize>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(what))
            }
        };
        let metric = |s: &str, what: &str| -> Result<f64> {
            let v: f64 = s.parse().map_err(|_| bad(what))?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(bad(what))
            }
        };
        out.push(RunRecord {
            dataset: row[0].to_string(),
            classifier: ClassifierKind::from_key(&row[1]).ok_or_else(|| bad("classifier"))?,
            condition: Condition::from_key(&row[2]).ok_or_else(|| bad("condition"))?,
            k: opt_usize(&row[3], "k")?,
            kn: opt_usize(&row[4], "kn")?,
            fold: row[5].parse().map_err(|_| bad("fold"))?,
            recall: metric(&row[6], "recall")?,
            balanced_accuracy: metric(&row[7], "balanced_accuracy")?,
            wall_secs: if row[8].is_empty() {
                None
            } else {
                Some(row[8].parse().map_err(|_| bad("wall_secs"))?)
            },
        });
    }
    Ok(out)
}

pub fn skipped_to_csv(skipped: &[Skipped]) -> String {
    let mut w = writer();
    w.write_record(["dataset", "classifier", "condition", "k", "kn", "fold", "reason"])
        .expect("in-memory write");
    for s in skipped {
        let mut row = key_fields(&s.key).to_vec();
        row.push(s.reason.clone());
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

pub fn timings_to_csv(timings: &[Timing]) -> String {
    let mut w = writer();
    w.write_record(["dataset", "classifier", "condition", "k", "kn", "fold", "wall_secs"])
        .expect("in-memory write");
    for t in timings {
        let mut row = key_fields(&t.key).to_vec();
        row.push(format!("{:.6}", t.secs));
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

pub fn oversampling_to_csv(stats: &[OversampleStat]) -> String {
    let mut w = writer();
    w.write_record([
        "dataset",
        "k",
        "kn",
        "fold",
        "clean_before",
        "defective_before",
        "synthetic",
        "clean_pre_filter",
        "defective_pre_filter",
        "clean_removed",
        "defective_removed",
    ])
    .expect("in-memory write");
    for s in stats {
        w.write_record([
            s.dataset.clone(),
            s.k.to_string(),
            s.kn.to_string(),
            s.fold.to_string(),
            s.before[0].to_string(),
            s.before[1].to_string(),
            s.synthetic.to_string(),
            s.pre_filter[0].to_string(),
            s.pre_filter[1].to_string(),
            s.removed[0].to_string(),
            s.removed[1].to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}
