use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdp_bench::config::ClassifierKind;
use sdp_bench::records::{records_from_csv, records_to_csv, RECORDS_HEADER};
use sdp_bench::report::{render_report, Metric};
use sdp_bench::{Condition, RunRecord};
use sdp_core::metrics::aggregate;

fn record(dataset: &str, c: ClassifierKind, cond: Condition, cell: Option<(usize, usize)>, fold: usize, r: f64, ba: f64) -> RunRecord {
    RunRecord {
        dataset: dataset.into(),
        classifier: c,
        condition: cond,
        k: cell.map(|c| c.0),
        kn: cell.map(|c| c.1),
        fold,
        recall: r,
        balanced_accuracy: ba,
        wall_secs: None,
    }
}

#[test]
fn two_values_give_expected_cell() {
    let recs = vec![
        record("D", ClassifierKind::Svm, Condition::Original, None, 0, 0.4, 0.5),
        record("D", ClassifierKind::Svm, Condition::Original, None, 1, 0.6, 0.5),
    ];
    let report = render_report(&recs).unwrap();
    assert_eq!(report.tables.len(), 1);
    let cell = report.tables[0].cell(ClassifierKind::Svm, Metric::Recall, Condition::Original).unwrap();
    assert!((cell.mean - 0.5).abs() < 1e-15);
    assert!((cell.std - 0.1414213562373095).abs() < 1e-12);
    assert_eq!(report.tables[0].cells.len(), 2);
    assert!(report.to_text().contains("μ = 0.500 σ = 0.141"));
}

#[test]
fn empty_records_are_rejected() {
    assert!(render_report(&[]).is_err());
}

#[test]
fn inconsistent_classifier_sets_are_rejected() {
    let recs = vec![
        record("D", ClassifierKind::Svm, Condition::Original, None, 0, 0.4, 0.5),
        record("D", ClassifierKind::Rf, Condition::Original, None, 0, 0.4, 0.5),
        record("D", ClassifierKind::Svm, Condition::Oversampled, Some((3, 5)), 0, 0.4, 0.5),
    ];
    let err = render_report(&recs).unwrap_err();
    assert!(err.to_string().contains("inconsistent classifier sets"), "{err}");
}

fn random_records(seed: u64) -> Vec<RunRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut recs = Vec::new();
    for dataset in ["A", "B"] {
        for c in ClassifierKind::ALL {
            for fold in 0..5 {
                recs.push(record(dataset, c, Condition::Original, None, fold, rng.random(), rng.random()));
            }
            for cell in [(3, 5), (5, 15)] {
                for fold in 0..10 {
                    recs.push(record(dataset, c, Condition::Oversampled, Some(cell), fold, rng.random(), rng.random()));
                }
            }
        }
    }
    recs
}

#[test]
fn cells_equal_aggregate_of_filtered_records() {
    let recs = random_records(1);
    let report = render_report(&recs).unwrap();
    for table in &report.tables {
        assert_eq!(table.cells.len(), 5 * 2 * 2);
        for c in ClassifierKind::ALL {
            for m in Metric::ALL {
                for cond in [Condition::Original, Condition::Oversampled] {
                    let values: Vec<f64> = recs
                        .iter()
                        .filter(|r| r.dataset == table.dataset && r.classifier == c && r.condition == cond)
                        .map(|r| m.of(r))
                        .collect();
                    assert_eq!(*table.cell(c, m, cond).unwrap(), aggregate(&values).unwrap());
                }
            }
        }
    }
    // Per-setting breakdown: 2 datasets x 5 classifiers x 2 cells x 2 metrics.
    assert_eq!(report.settings.len(), 40);
    for row in &report.settings {
        let values: Vec<f64> = recs
            .iter()
            .filter(|r| r.dataset == row.dataset && r.classifier == row.classifier)
            .filter(|r| r.k == Some(row.k) && r.kn == Some(row.kn))
            .map(|r| row.metric.of(r))
            .collect();
        assert_eq!(values.len(), 10);
        assert_eq!(row.summary, aggregate(&values).unwrap());
    }
    assert_eq!(report.to_tsv().lines().count(), 1 + 40);
    assert_eq!(report.settings_tsv().lines().count(), 1 + 40);
}

#[test]
fn records_csv_round_trips() {
    let mut recs = random_records(2);
    recs[3].wall_secs = Some(1.25);
    let text = records_to_csv(&recs);
    assert_eq!(text.lines().next().unwrap(), RECORDS_HEADER.join(","));
    assert_eq!(records_from_csv(&text).unwrap(), recs);
    assert!(records_from_csv("a,b\n1,2\n").is_err());
    let bad = text.replacen(",original,", ",sideways,", 1);
    assert!(records_from_csv(&bad).is_err());
}
