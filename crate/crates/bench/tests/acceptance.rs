//! One line per acceptance criterion. Corpus files missing from the data
//! directory make the corpus-level criteria INCOMPLETE; set
//! `SDP_REQUIRE_FULL_CORPUS=1` to count that as a failure.

use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdp_bench::records::records_to_csv;
use sdp_bench::report::{render_report, Metric};
use sdp_bench::{load_config, run_experiment, ClassifierKind, Condition, ExperimentConfig, Protocol, RunOutput};
use sdp_core::baselines::{logreg_gradient, logreg_objective};
use sdp_core::metrics::{balanced_accuracy, confusion, recall, ConfusionMatrix};
use sdp_core::oselm::{HiddenMap, OselmModel};
use sdp_core::resampling::{clni_filter, kmfos_plan};

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Pass,
    Fail,
    Incomplete,
    NotRun,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Incomplete => "INCOMPLETE",
            Status::NotRun => "NOT RUN",
        }
    }
}

type Verdict = (Status, String);

fn check(ok: bool, detail: String) -> Verdict {
    (if ok { Status::Pass } else { Status::Fail }, detail)
}

fn rel_err<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    let (mut diff, mut norm) = (0.0f64, 0.0f64);
    for (x, y) in a.into_iter().zip(b) {
        diff = diff.max((x - y).abs());
        norm = norm.max(y.abs());
    }
    diff / norm.max(f64::MIN_POSITIVE)
}

/// Sigmoid activations built with loops, then (GᵀG + εI)⁻¹ by Gauss-Jordan.
fn k_oracle(map: &HiddenMap, x: &DMatrix<f64>, eps: f64) -> Vec<f64> {
    let b = map.hidden();
    let g: Vec<Vec<f64>> = (0..x.nrows())
        .map(|i| {
            (0..b)
                .map(|j| {
                    let z: f64 = (0..x.ncols()).map(|c| x[(i, c)] * map.weights[(c, j)]).sum();
                    1.0 / (1.0 + (-(z + map.biases[j])).exp())
                })
                .collect()
        })
        .collect();
    let mut aug: Vec<Vec<f64>> = (0..b)
        .map(|p| {
            let mut row: Vec<f64> = (0..b)
                .map(|q| g.iter().map(|r| r[p] * r[q]).sum::<f64>() + if p == q { eps } else { 0.0 })
                .collect();
            row.extend((0..b).map(|q| if p == q { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for col in 0..b {
        let piv = (col..b).max_by(|&r, &s| aug[r][col].abs().total_cmp(&aug[s][col].abs())).unwrap();
        aug.swap(col, piv);
        let d = aug[col][col];
        aug[col].iter_mut().for_each(|v| *v /= d);
        for r in 0..b {
            if r != col {
                let f = aug[r][col];
                let pivot_row = aug[col].clone();
                aug[r].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
            }
        }
    }
    // Column-major to match nalgebra storage.
    (0..b).flat_map(|q| (0..b).map(move |p| (p, q))).map(|(p, q)| aug[p][b + q]).collect()
}

fn oselm_criteria() -> (Verdict, Verdict) {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let x = DMatrix::from_fn(500, 10, |_, _| rng.random_range(-1.0..1.0));
    let t: Vec<f64> = (0..500).map(|_| f64::from(u8::from(rng.random_bool(0.3)))).collect();
    let start = Instant::now();
    let mut model = OselmModel::init(&x.rows(0, 100).clone_owned(), &t[..100], 15, 7, 1e-8).unwrap();
    let mut at = 100;
    for c in [1, 7, 50, 342] {
        model = model.update(&x.rows(at, c).clone_owned(), &t[at..at + c]).unwrap();
        at += c;
    }
    let secs = start.elapsed().as_secs_f64();
    let batch = OselmModel::init_with_map(model.map.clone(), &x, &t, 1e-8).unwrap();
    let e1 = rel_err(&model.output_weights, &batch.output_weights);
    let oracle = k_oracle(&model.map, &x, 1e-8);
    let e2 = rel_err(model.k.iter(), &oracle);
    (
        check(e1 <= 1e-6 && secs < 1.0, format!("delta rel err {e1:.2e}, {secs:.4} s")),
        check(e2 <= 1e-6, format!("K rel err {e2:.2e}")),
    )
}

fn quota_criterion() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for case in 0..1000 {
        let k = rng.random_range(2..=8);
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(1..=80)).collect();
        let n1: usize = sizes.iter().sum();
        let n0 = n1 + rng.random_range(0..=10_000);
        let plan = kmfos_plan(&sizes, n0, n1).unwrap();
        let integer: usize = plan.pairs.iter().map(|p| p.quota).sum();
        let denom = ((k - 1) * n1) as i128;
        let mut exact = Ratio::from_integer(0i128);
        for p in 0..k {
            for q in p + 1..k {
                exact += Ratio::new((sizes[p] + sizes[q]) as i128 * (n0 - n1) as i128, denom);
            }
        }
        if integer != n0 - n1 || exact != Ratio::from_integer((n0 - n1) as i128) {
            return check(false, format!("case {case}: integer {integer}, exact {exact}, N {}", n0 - n1));
        }
    }
    check(true, "1000 tuples, integer and exact sums equal N".into())
}

fn clni_criterion() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for set in 0..50 {
        let m = rng.random_range(1..=5);
        let grid = set % 2 == 1;
        let x = DMatrix::from_fn(200, m, |_, _| {
            if grid { f64::from(rng.random_range(-2i32..=2)) } else { rng.random_range(-3.0..3.0) }
        });
        let y: Vec<u8> = (0..200).map(|_| u8::from(rng.random_bool(0.35))).collect();
        let kn = [1, 3, 5, 15, 20][set % 5];
        let expect: Vec<bool> = (0..200)
            .map(|i| {
                let mut d: Vec<(f64, usize)> = (0..200)
                    .filter(|&j| j != i)
                    .map(|j| ((0..m).map(|c| (x[(i, c)] - x[(j, c)]).powi(2)).sum(), j))
                    .collect();
                d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                2 * d[..kn].iter().filter(|&&(_, j)| y[j] != y[i]).count() <= kn
            })
            .collect();
        if clni_filter(&x, &y, kn).unwrap().keep_mask != expect {
            return check(false, format!("set {set} (kn {kn}) differs"));
        }
    }
    check(true, "50 sets of 200 points match exactly".into())
}

fn metric_criterion() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for _ in 0..500 {
        let n = rng.random_range(2..500);
        let mut t: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.1))).collect();
        t[rng.random_range(0..n)] = 1;
        if t.iter().all(|&v| v == 1) {
            t[0] = 0;
        }
        if balanced_accuracy(&confusion(&t, &vec![0; n]).unwrap()).unwrap() != 0.5 {
            return check(false, "all-negative predictor off 0.5".into());
        }
    }
    let cm = ConfusionMatrix { tp: 3, fp: 2, tn: 8, fn_: 1 };
    let units = recall(&cm).unwrap() == 0.75
        && balanced_accuracy(&cm).unwrap() == 0.775
        && recall(&ConfusionMatrix { tp: 0, fp: 0, tn: 5, fn_: 4 }).unwrap() == 0.0
        && balanced_accuracy(&ConfusionMatrix { tp: 2, fp: 0, tn: 3, fn_: 0 }).unwrap() == 1.0
        && recall(&ConfusionMatrix { tp: 0, fp: 1, tn: 5, fn_: 0 }).is_err();
    check(units, "500 all-negative cases, unit cases exact".into())
}

fn gradient_criterion() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    let x = DMatrix::from_fn(120, 4, |_, _| rng.random_range(-2.0..2.0));
    let y: Vec<u8> = (0..120).map(|i| u8::from(x[(i, 0)] - x[(i, 2)] + rng.random_range(-1.0..1.0) > 0.0)).collect();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let w: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b = rng.random_range(-3.0..3.0);
        let l2 = rng.random_range(0.0..0.5);
        let (gw, gb) = logreg_gradient(&x, &y, &w, b, l2);
        let mut numeric = Vec::new();
        for j in 0..4 {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[j] += h;
            down[j] -= h;
            numeric.push((logreg_objective(&x, &y, &up, b, l2) - logreg_objective(&x, &y, &down, b, l2)) / (2.0 * h));
        }
        numeric.push((logreg_objective(&x, &y, &w, b + h, l2) - logreg_objective(&x, &y, &w, b - h, l2)) / (2.0 * h));
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        worst = worst.max(rel_err(&analytic, &numeric));
    }
    check(worst <= 1e-5, format!("worst rel err {worst:.2e} over 20 points"))
}

/// Wraps a corpus verdict: absent files downgrade a pass.
fn corpus(verdict: Verdict, absent: &[String]) -> Verdict {
    match verdict {
        (Status::Pass, d) if !absent.is_empty() => {
            (Status::Incomplete, format!("{d}; absent: {}", absent.join(", ")))
        }
        v => v,
    }
}

fn trend_criteria(out: &RunOutput, names: &[String], secs: f64) -> (Verdict, Verdict) {
    let report = match render_report(&out.records) {
        Ok(r) => r,
        Err(e) => return ((Status::Fail, e.to_string()), (Status::Fail, e.to_string())),
    };
    let mut ok7 = secs <= 1800.0;
    let mut ok8 = true;
    let mut lines7 = Vec::new();
    let mut lines8 = Vec::new();
    for name in names {
        let Some(table) = report.tables.iter().find(|t| &t.dataset == name) else {
            ok7 = false;
            ok8 = false;
            lines7.push(format!("{name}: no records"));
            continue;
        };
        let mean = |c, m, cond| table.cell(c, m, cond).map(|s| s.mean);
        let mut strong_ba = 0;
        let mut parts = Vec::new();
        for c in ClassifierKind::ALL {
            let d = |m| Some(mean(c, m, Condition::Oversampled)? - mean(c, m, Condition::Original)?);
            let (Some(dr), Some(dba)) = (d(Metric::Recall), d(Metric::BalancedAccuracy)) else {
                ok7 = false;
                parts.push(format!("{} missing", c.key()));
                continue;
            };
            ok7 &= dr >= 0.15 && dba >= 0.0;
            strong_ba += usize::from(dba >= 0.05);
            parts.push(format!("{} {dr:+.3}/{dba:+.3}", c.key()));
            if c == ClassifierKind::Oselm {
                ok8 &= dr >= 0.3;
                lines8.push(format!("{name} gap {dr:.3}"));
            }
        }
        ok7 &= strong_ba >= 4;
        lines7.push(format!("{name}: {}", parts.join(", ")));
    }
    (
        check(ok7, format!("{} (recall/BA deltas); run {secs:.0} s", lines7.join("; "))),
        check(ok8, lines8.join(", ")),
    )
}

fn balance_criterion(out: &RunOutput, cfg: &ExperimentConfig, names: &[String]) -> Verdict {
    let expected = cfg.folds_oversampled * cfg.grid.cells().len() * names.len();
    let skipped = out.skipped.iter().filter(|s| s.key.condition == Condition::Oversampled).count();
    let unequal = out.oversampling.iter().filter(|s| s.pre_filter[0] != s.pre_filter[1]).count();
    check(
        unequal == 0 && skipped == 0 && out.oversampling.len() == expected,
        format!("{} of {expected} (dataset, k, kn, fold) cells checked, {unequal} unequal, {skipped} skipped", out.oversampling.len()),
    )
}

#[test]
fn acceptance() {
    let require_full = std::env::var("SDP_REQUIRE_FULL_CORPUS").is_ok_and(|v| v == "1");
    let config_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    let cfg = load_config(&config_path).unwrap();
    let (present, absent): (Vec<_>, Vec<_>) =
        cfg.datasets.iter().partition(|d| cfg.dataset_path(d).exists());
    let names: Vec<String> = present.iter().map(|d| d.name.clone()).collect();
    let absent: Vec<String> = absent.iter().map(|d| d.name.clone()).collect();

    let mut verdicts: Vec<Verdict> = Vec::new();
    let (c1, c2) = oselm_criteria();
    verdicts.extend([c1, c2, quota_criterion()]);

    let mut runs = Vec::new();
    let mut first_secs = 0.0;
    if !names.is_empty() {
        for _ in 0..2 {
            let mut out = RunOutput::default();
            let start = Instant::now();
            for name in &names {
                out.extend(run_experiment(&cfg, Protocol::Both, Some(name)).unwrap());
            }
            out.sort();
            if runs.is_empty() {
                first_secs = start.elapsed().as_secs_f64();
            }
            runs.push(out);
        }
    }

    let not_run = || (Status::NotRun, format!("no corpus file present ({})", absent.join(", ")));
    verdicts.push(match runs.first() {
        Some(out) => corpus(balance_criterion(out, &cfg, &names), &absent),
        None => not_run(),
    });
    verdicts.extend([clni_criterion(), metric_criterion()]);
    let (c7, c8) = match runs.first() {
        Some(out) => {
            let (a, b) = trend_criteria(out, &names, first_secs);
            (corpus(a, &absent), corpus(b, &absent))
        }
        None => (not_run(), not_run()),
    };
    verdicts.extend([c7, c8]);
    verdicts.push(match runs.as_slice() {
        [a, b] => {
            let (x, y) = (records_to_csv(&a.records), records_to_csv(&b.records));
            corpus(check(x == y, format!("{} bytes, identical: {}", x.len(), x == y)), &absent)
        }
        _ => not_run(),
    });
    verdicts.push(gradient_criterion());

    let mut failed = Vec::new();
    for (i, (status, detail)) in verdicts.iter().enumerate() {
        println!("criterion {:>2}: {:<10} {detail}", i + 1, status.label());
        let bad = match status {
            Status::Fail => true,
            Status::Incomplete | Status::NotRun => require_full,
            Status::Pass => false,
        };
        if bad {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
