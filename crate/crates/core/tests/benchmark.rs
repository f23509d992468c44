use std::sync::Mutex;

use agrnn::benchmark::{
    emit_report, run_benchmark, run_benchmark_with, split_rows, BenchmarkConfig, BenchmarkReport,
    Evaluator, Method, ReportFormat,
};
use agrnn::datagen::{gen_friedman, FriedmanSpec};
use agrnn::{Dataset, Result};
use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_friedman(seed: u64) -> Dataset {
    gen_friedman(&FriedmanSpec {
        d: 8,
        ..FriedmanSpec::new(120, seed)
    })
    .unwrap()
}

fn quick(methods: Vec<Method>) -> BenchmarkConfig {
    BenchmarkConfig {
        methods,
        repeats: 3,
        seed: 4,
        ..BenchmarkConfig::default()
    }
}

/// Predicts the training mean and records every split it is handed.
#[derive(Default)]
struct Recording {
    calls: Mutex<Vec<(Vec<usize>, Vec<usize>)>>,
}

impl Evaluator for Recording {
    fn name(&self) -> &str {
        "mean"
    }
    fn grid(&self) -> Vec<f64> {
        vec![0.0, 1.0]
    }
    fn default_param(&self) -> f64 {
        0.0
    }
    fn fit_predict(
        &self,
        _x: ArrayView2<f64>,
        y: &[f64],
        train: &[usize],
        test: &[usize],
        params: &[f64],
    ) -> Result<Vec<Vec<f64>>> {
        self.calls.lock().unwrap().push((train.to_vec(), test.to_vec()));
        let m = train.iter().map(|&i| y[i]).sum::<f64>() / train.len() as f64;
        Ok(params.iter().map(|_| vec![m; test.len()]).collect())
    }
}

#[test]
fn train_and_test_rows_never_overlap() {
    let ds = small_friedman(1);
    let ev = Recording::default();
    let cfg = quick(vec![Method::Ftest, Method::Rrelieff]);
    run_benchmark_with(&ds, &cfg, &ev).unwrap();
    let calls = ev.calls.lock().unwrap();
    assert!(!calls.is_empty());
    for (train, test) in calls.iter() {
        assert!(!test.is_empty());
        assert!(test.iter().all(|i| !train.contains(i)));
    }
    for r in 0..cfg.repeats {
        let (train, test) = split_rows(ds.n(), &cfg, r).unwrap();
        assert_eq!((train.len(), test.len()), (96, 24));
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort();
        assert_eq!(all, (0..ds.n()).collect::<Vec<_>>());
    }
}

#[test]
fn mean_predictor_mse_matches_direct_computation() {
    let ds = small_friedman(2);
    let cfg = BenchmarkConfig {
        cv_folds: 1,
        ..quick(vec![Method::Cfs])
    };
    let report = run_benchmark_with(&ds, &cfg, &Recording::default()).unwrap();
    let y = ds.target();
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let ys: Vec<f64> = y.iter().map(|v| (v - lo) / (hi - lo)).collect();
    let expected: Vec<f64> = (0..cfg.repeats)
        .map(|r| {
            let (train, test) = split_rows(ds.n(), &cfg, r).unwrap();
            let m = train.iter().map(|&i| ys[i]).sum::<f64>() / train.len() as f64;
            test.iter().map(|&i| (ys[i] - m).powi(2)).sum::<f64>() / test.len() as f64
        })
        .collect();
    let got = &report.reference.unwrap().mse_per_repeat;
    for (a, b) in got.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

/// Brute-force k-NN with index tie-break on the min-max scaled data.
fn knn_mse(ds: &Dataset, cols: &[usize], cfg: &BenchmarkConfig, r: usize, k: usize) -> f64 {
    let s = ds.min_max_scale(true).unwrap();
    let (train, test) = split_rows(ds.n(), cfg, r).unwrap();
    let mut total = 0.0;
    for &q in &test {
        let mut dist: Vec<(f64, usize)> = train
            .iter()
            .map(|&i| {
                let d2: f64 = cols.iter().map(|&j| (s.features()[[q, j]] - s.features()[[i, j]]).powi(2)).sum();
                (d2, i)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let p = dist[..k].iter().map(|&(_, i)| s.target()[i]).sum::<f64>() / k as f64;
        total += (p - s.target()[q]).powi(2);
    }
    total / test.len() as f64
}

#[test]
fn knn_reference_row_matches_brute_force() {
    let ds = small_friedman(3);
    let cfg = BenchmarkConfig {
        cv_folds: 1,
        ..quick(vec![Method::Cfs])
    };
    let report = run_benchmark(&ds, &cfg).unwrap();
    let all: Vec<usize> = (0..ds.d()).collect();
    let reference = report.reference.unwrap();
    for r in 0..cfg.repeats {
        let want = knn_mse(&ds, &all, &cfg, r, 5);
        assert!((reference.mse_per_repeat[r] - want).abs() < 1e-12);
        assert_eq!(reference.tuned_params[r], 5.0);
    }
}

#[test]
fn runs_are_bitwise_reproducible_and_round_trip() {
    let ds = small_friedman(5);
    let cfg = quick(Method::ALL.to_vec());
    let a = run_benchmark(&ds, &cfg).unwrap();
    let b = run_benchmark(&ds, &cfg).unwrap();
    let ja = emit_report(&a, ReportFormat::Json).unwrap();
    assert_eq!(ja, emit_report(&b, ReportFormat::Json).unwrap());
    let back: BenchmarkReport = serde_json::from_str(&ja).unwrap();
    assert_eq!(back, a);
    assert_eq!(
        emit_report(&a, ReportFormat::Csv).unwrap(),
        emit_report(&b, ReportFormat::Csv).unwrap()
    );
}

#[test]
fn rows_are_consistent() {
    let ds = small_friedman(6);
    let report = run_benchmark(&ds, &quick(Method::ALL.to_vec())).unwrap();
    assert_eq!(report.methods.len(), 5);
    let count_of = |m: Method| report.methods.iter().find(|r| r.method == m).unwrap().count;
    for row in &report.methods {
        assert_eq!(row.count, row.selected.len());
        assert_eq!(row.zero_selection, row.count == 0);
        assert_eq!(row.evaluation.mse_per_repeat.len(), 3);
        assert!(row.evaluation.mse_mean >= 0.0);
    }
    assert_eq!(count_of(Method::Ftest), count_of(Method::Rrelieff));
    assert_eq!(count_of(Method::Mi), count_of(Method::Rrelieff));
}

#[test]
fn zero_selection_falls_back_to_all_features() {
    // target independent of both features: rrelieff keeps nothing
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = Array2::from_shape_fn((150, 2), |_| rng.random::<f64>());
    let y = Array1::from_shape_fn(150, |_| rng.random::<f64>());
    let ds = Dataset::with_default_names(x, y).unwrap();
    let report = run_benchmark(&ds, &quick(vec![Method::Rrelieff, Method::Ftest])).unwrap();
    let reference = report.reference.clone().unwrap();
    for row in &report.methods {
        if row.zero_selection {
            assert_eq!(row.evaluation, reference);
        }
    }
    let text = emit_report(&report, ReportFormat::Text).unwrap();
    if report.methods.iter().any(|r| r.zero_selection) {
        assert!(text.contains('*'));
    }
}

#[test]
fn single_feature_dataset() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Array2::from_shape_fn((80, 1), |_| rng.random::<f64>());
    let y = x.column(0).mapv(|v| (6.0 * v).sin());
    let ds = Dataset::with_default_names(x, y).unwrap();
    let report = run_benchmark(&ds, &quick(Method::ALL.to_vec())).unwrap();
    assert_eq!(report.metadata.d, 1);
    for row in &report.methods {
        assert!(row.count <= 1);
    }
}

#[test]
fn empty_method_list_gives_header_only_report() {
    let ds = small_friedman(7);
    let report = run_benchmark(&ds, &quick(vec![])).unwrap();
    assert!(report.methods.is_empty() && report.reference.is_none());
    assert_eq!(emit_report(&report, ReportFormat::Text).unwrap().lines().count(), 2);
}

#[test]
fn invalid_configs_are_rejected() {
    let ds = small_friedman(8);
    for cfg in [
        BenchmarkConfig { train_fraction: 1.0, ..quick(vec![]) },
        BenchmarkConfig { cv_folds: 0, ..quick(vec![]) },
        BenchmarkConfig { repeats: 0, ..quick(vec![]) },
        BenchmarkConfig { cv_folds: 200, ..quick(vec![]) },
        quick(vec![Method::As, Method::As]),
    ] {
        assert!(run_benchmark(&ds, &cfg).is_err());
    }
}
