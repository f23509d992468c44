use agrnn::datagen::{
    friedman_response, gen_butterfly, gen_friedman, shuffle_column, ButterflySpec, FriedmanSpec,
};
use agrnn::io::{read_csv, write_csv};
use agrnn::numeric::pearson;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn butterfly_redundancy_relations_hold_exactly() {
    let ds = gen_butterfly(&ButterflySpec::new(2000, 3)).unwrap();
    let f = ds.features();
    for r in f.outer_iter() {
        let (x1, x2, i6) = (r[0], r[1], r[5]);
        assert!(rel(r[2], (x1 + 5.0).log10()) < 1e-12);
        assert!(rel(r[3], x1 * x1 - x2 * x2) < 1e-12);
        assert!(rel(r[4], x1.powi(4) - x2.powi(4)) < 1e-12);
        assert!(rel(r[6], (i6 + 5.0).log10()) < 1e-12);
        assert!(rel(r[7], i6 + r[6]) < 1e-12);
        assert!(f.iter().all(|v| v.is_finite()));
        assert!((-5.0..5.0).contains(&x1) && x1 > -5.0);
    }
}

#[test]
fn butterfly_irrelevant_features_are_uncorrelated_with_target() {
    let ds = gen_butterfly(&ButterflySpec::new(10_000, 12)).unwrap();
    let y = ds.target().to_vec();
    for j in 5..8 {
        let r = pearson(&ds.column(j).to_vec(), &y);
        assert!(r.abs() < 0.05, "{}: r = {r}", ds.feature_names()[j]);
    }
}

#[test]
fn butterfly_is_reproducible_and_weight_seed_matters() {
    let spec = ButterflySpec::new(100, 5);
    assert_eq!(gen_butterfly(&spec).unwrap(), gen_butterfly(&spec).unwrap());
    let other = ButterflySpec {
        weight_seed: 99,
        ..spec.clone()
    };
    let a = gen_butterfly(&spec).unwrap();
    let b = gen_butterfly(&other).unwrap();
    assert_eq!(a.features(), b.features());
    assert_ne!(a.target(), b.target());
}

#[test]
fn friedman_formula_and_column_means() {
    let mut x = vec![0.5; 30];
    assert!((friedman_response(&x) - 14.571_067_811_865_476).abs() < 1e-12);
    x[2] = 0.5;
    let base = friedman_response(&x);
    x[10] = 0.9;
    assert_eq!(friedman_response(&x), base);

    let ds = gen_friedman(&FriedmanSpec::new(100_000, 4)).unwrap();
    for j in 0..30 {
        let m = ds.column(j).mean().unwrap();
        assert!((m - 0.5).abs() < 0.01, "column {j} mean {m}");
    }
}

#[test]
fn noise_free_friedman_ignores_irrelevant_columns() {
    let spec = FriedmanSpec {
        noise_sd: 0.0,
        ..FriedmanSpec::new(500, 6)
    };
    let ds = gen_friedman(&spec).unwrap();
    for (i, row) in ds.features().outer_iter().enumerate() {
        assert!(rel(ds.target()[i], friedman_response(row.as_slice().unwrap())) < 1e-12);
    }
    let shuffled = shuffle_column(&ds, "x17", 3).unwrap();
    assert_eq!(shuffled.target(), ds.target());
    assert!(gen_friedman(&FriedmanSpec { d: 4, ..spec }).is_err());
}

#[test]
fn shuffle_column_permutes_only_that_column() {
    let ds = gen_butterfly(&ButterflySpec::new(200, 1)).unwrap();
    let s = shuffle_column(&ds, "X1", 8).unwrap();
    let mut a = ds.column(0).to_vec();
    let mut b = s.column(0).to_vec();
    assert_ne!(a, b);
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    assert_eq!(a, b);
    for j in 1..8 {
        assert_eq!(ds.column(j), s.column(j));
    }
    assert_eq!(ds.target(), s.target());
    assert_eq!(s, shuffle_column(&ds, "X1", 8).unwrap());
    assert!(shuffle_column(&ds, "nope", 8).is_err());
}

#[test]
fn csv_round_trip_is_exact() {
    let ds = gen_butterfly(&ButterflySpec::new(500, 2)).unwrap();
    let mut buf = Vec::new();
    write_csv(&ds, "Y", &mut buf).unwrap();
    let back = read_csv(buf.as_slice(), "Y").unwrap();
    assert_eq!(back.dropped_rows, 0);
    assert_eq!(back.dataset.feature_names(), ds.feature_names());
    for (a, b) in back.dataset.features().iter().zip(ds.features().iter()) {
        assert!(rel(*a, *b) <= 1e-12 || a == b);
    }
    for (a, b) in back.dataset.target().iter().zip(ds.target().iter()) {
        assert!(rel(*a, *b) <= 1e-12 || a == b);
    }
}

#[test]
fn csv_files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let ds = gen_friedman(&FriedmanSpec::new(40, 1)).unwrap();
    agrnn::io::save_csv(&ds, "Y", &path).unwrap();
    let back = agrnn::io::load_csv(&path, "Y").unwrap().dataset;
    assert_eq!(back, ds);
    assert!(matches!(
        agrnn::io::load_csv(dir.path().join("missing.csv"), "Y"),
        Err(agrnn::Error::Io { .. })
    ));
}
