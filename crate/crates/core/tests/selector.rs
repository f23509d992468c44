use agrnn::datagen::{gen_butterfly, gen_friedman, permutation, ButterflySpec, FriedmanSpec};
use agrnn::selector::shuffle_importance_with;
use agrnn::{
    loo_loss, select, shuffle_importance, Bandwidths, DataSource, Dataset, OptimizerConfig,
};
use ndarray::{Array1, Array2};

fn line(n: usize) -> Array1<f64> {
    Array1::linspace(0.0, 1.0, n)
}

/// Shuffled targets: the fitted bandwidth is either a local minimum of the LOO
/// curve on a dense grid or sits on the flat large-bandwidth plateau.
#[test]
fn independent_target_ends_at_a_loo_minimum() {
    let x = line(200);
    let mut rejected = 0;
    for seed in 0..20 {
        let perm = permutation(200, seed);
        let y: Array1<f64> = perm.iter().map(|&i| x[i]).collect();
        let ds = Dataset::with_default_names(x.clone().into_shape_with_order((200, 1)).unwrap(), y)
            .unwrap();
        let r = select(&ds, &OptimizerConfig::default(), 1.0).unwrap();
        assert!(r.optim.converged);
        let loss_at = |t: f64| loo_loss(&ds, &Bandwidths::from_log(&[t]).unwrap()).unwrap();
        let theta = r.optim.theta_opt[0];
        let flat = loss_at(1e4f64.ln());
        let on_plateau = theta > 0.0 && (r.optim.loss_opt - flat).abs() <= 1e-4 * flat;
        if !on_plateau {
            for k in -10..=10 {
                let t = theta + 0.02 * k as f64;
                let l = loss_at(t);
                assert!(r.optim.loss_opt <= l * (1.0 + 1e-6), "seed {seed}: {} > {l} at {t}", r.optim.loss_opt);
            }
        }
        if !r.relevant_mask[0] {
            rejected += 1;
        }
    }
    assert!(rejected > 0);
}

#[test]
fn butterfly_relevant_features_get_smallest_bandwidths() {
    let ds = gen_butterfly(&ButterflySpec::new(1000, 21)).unwrap();
    let r = select(&ds, &OptimizerConfig::default(), 1.0).unwrap();
    let s = r.sigma_opt.as_slice();
    let mut order: Vec<usize> = (0..8).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let mut two = order[..2].to_vec();
    two.sort();
    assert_eq!(two, vec![0, 1], "{s:?}");
    assert!(s[5] > 1.0);
}

#[test]
fn column_permutation_permutes_the_result() {
    let ds = gen_friedman(&FriedmanSpec {
        d: 7,
        ..FriedmanSpec::new(150, 2)
    })
    .unwrap();
    let perm = vec![3, 6, 0, 5, 1, 4, 2];
    let permuted = ds.select_features(&perm).unwrap();
    let cfg = OptimizerConfig::default();
    let a = select(&ds, &cfg, 1.0).unwrap();
    let b = select(&permuted, &cfg, 1.0).unwrap();
    for (k, &j) in perm.iter().enumerate() {
        assert_eq!(b.feature_names[k], a.feature_names[j]);
        assert_eq!(b.relevant_mask[k], a.relevant_mask[j]);
        let (sa, sb) = (a.sigma_opt.as_slice()[j], b.sigma_opt.as_slice()[k]);
        if sa <= 1.0 {
            assert!((sa.ln() - sb.ln()).abs() < 1e-4, "{}: {sa} vs {sb}", a.feature_names[j]);
        }
    }
}

#[test]
fn duplicate_columns_get_equal_bandwidths() {
    let base = gen_friedman(&FriedmanSpec::new(200, 9)).unwrap();
    let mut x = Array2::zeros((200, 4));
    for (k, j) in [0, 3, 3, 8].into_iter().enumerate() {
        x.column_mut(k).assign(&base.column(j));
    }
    let ds = Dataset::with_default_names(x, base.target().to_owned()).unwrap();
    let r = select(&ds, &OptimizerConfig::default(), 1.0).unwrap();
    let s = r.sigma_opt.as_slice();
    assert!((s[1] - s[2]).abs() <= 1e-8 * s[1].max(1.0), "{} vs {}", s[1], s[2]);
}

#[test]
fn identity_shuffle_reproduces_the_baseline() {
    let make = |s: u64| gen_butterfly(&ButterflySpec::new(150, s));
    let identity = |n: usize, _: u64| (0..n).collect::<Vec<_>>();
    let rep = shuffle_importance_with(
        DataSource::Generated(&make),
        "X1",
        &OptimizerConfig::default(),
        1.0,
        3,
        5,
        &identity,
    )
    .unwrap();
    assert_eq!(rep.sigma_baseline, rep.sigma_shuffled);
    assert!(!rep.crossed_threshold);
    for run in &rep.runs {
        assert_eq!(run.baseline_sigma, run.shuffled_sigma);
    }
}

#[test]
fn shuffle_importance_is_reproducible_and_ci_brackets_mean() {
    let ds = gen_butterfly(&ButterflySpec::new(150, 3)).unwrap();
    let cfg = OptimizerConfig::default();
    let a = shuffle_importance(DataSource::Fixed(&ds), "X2", &cfg, 1.0, 3, 11).unwrap();
    let b = shuffle_importance(DataSource::Fixed(&ds), "X2", &cfg, 1.0, 3, 11).unwrap();
    assert_eq!(a, b);
    for ci in a.sigma_baseline.iter().chain(&a.sigma_shuffled) {
        assert!(ci.ci_low <= ci.mean && ci.mean <= ci.ci_high);
    }
    assert!(shuffle_importance(DataSource::Fixed(&ds), "nope", &cfg, 1.0, 2, 1).is_err());
}

#[test]
fn empty_selection_is_a_warning_not_an_error() {
    let n = 100;
    let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
    let y = Array1::from_shape_fn(n, |i| ((i * 37) % 11) as f64);
    let ds = Dataset::with_default_names(x, y).unwrap();
    let r = select(&ds, &OptimizerConfig::default(), 1e-3).unwrap();
    assert!(r.selected_indices().is_empty());
    assert!(r.warnings.iter().any(|w| w.contains("no feature")));
}
