//! Comparison harness: run each feature-selection method once on the whole
//! dataset, then score the chosen subset with a simple regressor over
//! repeated train/test splits, tuning the regressor by cross-validation on
//! the training part of every split.

mod evaluator;
mod report;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, ReliefParams, DEFAULT_BINS};
use crate::datagen::permutation;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{derive_seed, mean, sample_std};
use crate::optimizer::OptimizerConfig;
use crate::selector::{select, DEFAULT_THRESHOLD};

pub use evaluator::{Evaluator, GrnnIsotropic, Knn};
pub use report::{
    emit_report, format_mse, BenchmarkReport, Evaluation, Metadata, MethodRow, ReportFormat,
    Timings, SCHEMA_VERSION,
};

const SPLIT_STREAM: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    As,
    Ftest,
    Mi,
    Cfs,
    Rrelieff,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::As,
        Method::Ftest,
        Method::Mi,
        Method::Cfs,
        Method::Rrelieff,
    ];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::As => "as",
            Method::Ftest => "ftest",
            Method::Mi => "mi",
            Method::Cfs => "cfs",
            Method::Rrelieff => "rrelieff",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "as" => Ok(Method::As),
            "ftest" => Ok(Method::Ftest),
            "mi" => Ok(Method::Mi),
            "cfs" => Ok(Method::Cfs),
            "rrelieff" | "relieff" => Ok(Method::Rrelieff),
            other => Err(Error::input(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluatorKind {
    #[default]
    Knn,
    GrnnIsotropic,
}

impl fmt::Display for EvaluatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvaluatorKind::Knn => "knn",
            EvaluatorKind::GrnnIsotropic => "grnn-isotropic",
        })
    }
}

impl FromStr for EvaluatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" => Ok(EvaluatorKind::Knn),
            "grnn-isotropic" | "grnn" => Ok(EvaluatorKind::GrnnIsotropic),
            other => Err(Error::input(format!("unknown evaluator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
    pub evaluator: EvaluatorKind,
    pub train_fraction: f64,
    /// Folds used to tune the evaluator; 1 disables tuning.
    pub cv_folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub target_column: String,
    /// Report MSE on the min-max scaled target.
    pub scale_target: bool,
    pub optimizer: OptimizerConfig,
    pub threshold: f64,
    pub relief: ReliefParams,
    pub mi_bins: usize,
    pub dataset_name: String,
    /// Wall-clock timings make the report non-reproducible, so they are opt-in.
    pub record_timings: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            evaluator: EvaluatorKind::Knn,
            train_fraction: 0.8,
            cv_folds: 5,
            repeats: 20,
            seed: 0,
            target_column: "Y".to_string(),
            scale_target: true,
            optimizer: OptimizerConfig::default(),
            threshold: DEFAULT_THRESHOLD,
            relief: ReliefParams::default(),
            mi_bins: DEFAULT_BINS,
            dataset_name: "dataset".to_string(),
            record_timings: false,
        }
    }
}

impl BenchmarkConfig {
    /// Sizes of the training and test parts of every split.
    pub fn split_sizes(&self, n: usize) -> Result<(usize, usize)> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::input(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.cv_folds == 0 {
            return Err(Error::input("cv_folds must be positive"));
        }
        if self.repeats == 0 {
            return Err(Error::input("repeats must be positive"));
        }
        let n_train = (self.train_fraction * n as f64).floor() as usize;
        if n_train < self.cv_folds.max(1) || n_train == 0 {
            return Err(Error::input(format!(
                "training part has {n_train} rows, fewer than cv_folds = {}",
                self.cv_folds
            )));
        }
        if n_train >= n {
            return Err(Error::input("test part is empty"));
        }
        Ok((n_train, n - n_train))
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.split_sizes(n)?;
        self.optimizer.validate()?;
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::input("threshold must be positive"));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::input("methods must not repeat"));
        }
        Ok(())
    }
}

struct Selection {
    indices: Vec<usize>,
    warnings: Vec<String>,
}

fn relief_subset(dataset: &Dataset, config: &BenchmarkConfig) -> Result<Selection> {
    let scores = baselines::rrelieff_scores(dataset, &config.relief)?;
    Ok(Selection {
        indices: baselines::positive_scores(&scores).indices,
        warnings: scores.warnings,
    })
}

fn top_count(scores: baselines::ScoreVector, count: usize) -> Result<Selection> {
    let indices = if count == 0 {
        Vec::new()
    } else {
        baselines::top_k(&scores, count)?.indices
    };
    Ok(Selection {
        indices,
        warnings: scores.warnings,
    })
}

fn select_with(
    method: Method,
    dataset: &Dataset,
    config: &BenchmarkConfig,
    relief_count: &mut Option<usize>,
) -> Result<Selection> {
    let mut relief_count = |ds: &Dataset| -> Result<usize> {
        if let Some(c) = *relief_count {
            return Ok(c);
        }
        let c = relief_subset(ds, config)?.indices.len();
        *relief_count = Some(c);
        Ok(c)
    };
    match method {
        Method::As => {
            let r = select(dataset, &config.optimizer, config.threshold)?;
            Ok(Selection {
                indices: r.selected_indices(),
                warnings: r.warnings,
            })
        }
        Method::Ftest => top_count(baselines::ftest_scores(dataset)?, relief_count(dataset)?),
        Method::Mi => top_count(
            baselines::mi_scores(dataset, config.mi_bins)?,
            relief_count(dataset)?,
        ),
        Method::Cfs => {
            let r = baselines::cfs_select(dataset)?;
            Ok(Selection {
                indices: r.selected.indices,
                warnings: r.warnings,
            })
        }
        Method::Rrelieff => relief_subset(dataset, config),
    }
}

/// Runs the protocol with the evaluator named in the config.
pub fn run_benchmark(dataset: &Dataset, config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    match config.evaluator {
        EvaluatorKind::Knn => run_benchmark_with(dataset, config, &Knn::default()),
        EvaluatorKind::GrnnIsotropic => {
            run_benchmark_with(dataset, config, &GrnnIsotropic::default())
        }
    }
}

/// Runs the protocol with a caller-supplied evaluator.
///
/// Feature selection sees the whole dataset once, before any split. F-test
/// and MI keep as many features as RReliefF selects. Identical subsets are
/// evaluated once.
pub fn run_benchmark_with(
    dataset: &Dataset,
    config: &BenchmarkConfig,
    evaluator: &dyn Evaluator,
) -> Result<BenchmarkReport> {
    config.validate(dataset.n())?;
    let scaled = dataset.min_max_scale(config.scale_target)?;
    let names = dataset.feature_names();
    let all: Vec<usize> = (0..dataset.d()).collect();

    let mut selection_time = BTreeMap::new();
    let mut relief_count = None;
    let mut chosen = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let start = Instant::now();
        let sel = select_with(method, dataset, config, &mut relief_count)?;
        selection_time.insert(method.to_string(), start.elapsed().as_secs_f64());
        chosen.push((method, sel));
    }

    let start = Instant::now();
    let mut cache: BTreeMap<Vec<usize>, Evaluation> = BTreeMap::new();
    let mut evaluate = |subset: &[usize]| -> Result<Evaluation> {
        let mut key = subset.to_vec();
        key.sort_unstable();
        if let Some(e) = cache.get(&key) {
            return Ok(e.clone());
        }
        let e = evaluate_subset(&scaled, &key, config, evaluator)?;
        cache.insert(key, e.clone());
        Ok(e)
    };

    let mut rows = Vec::with_capacity(chosen.len());
    for (method, sel) in chosen {
        let zero = sel.indices.is_empty();
        let evaluation = evaluate(if zero { &all } else { &sel.indices })?;
        rows.push(MethodRow {
            method,
            selected: sel.indices.iter().map(|&j| names[j].clone()).collect(),
            count: sel.indices.len(),
            zero_selection: zero,
            evaluation,
            warnings: sel.warnings,
        });
    }
    let reference = if rows.is_empty() {
        None
    } else {
        Some(evaluate(&all)?)
    };
    let evaluation_time = start.elapsed().as_secs_f64();

    let mut notes = vec![
        "feature selection runs once on the full dataset before the splits".to_string(),
        format!(
            "{}-fold cross-validation on each training part tunes the {} hyperparameter",
            config.cv_folds,
            evaluator.name()
        ),
        "ftest and mi keep as many features as rrelieff selects".to_string(),
    ];
    if config.scale_target {
        notes.push("mse is measured on the min-max scaled target".to_string());
    }
    Ok(BenchmarkReport {
        schema_version: SCHEMA_VERSION,
        metadata: Metadata {
            dataset: config.dataset_name.clone(),
            n: dataset.n(),
            d: dataset.d(),
            seed: config.seed,
            config: config.clone(),
            notes,
            timings: config.record_timings.then_some(Timings {
                selection: selection_time,
                evaluation: evaluation_time,
            }),
        },
        methods: rows,
        reference,
    })
}

/// Seeded shuffle of the rows into `(train, test)` for repeat `r`.
pub fn split_rows(n: usize, config: &BenchmarkConfig, repeat: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let (n_train, _) = config.split_sizes(n)?;
    let mut perm = permutation(n, derive_seed(config.seed, SPLIT_STREAM, repeat as u64));
    let test = perm.split_off(n_train);
    Ok((perm, test))
}

fn squared_error(pred: &[f64], y: &[f64], rows: &[usize]) -> f64 {
    pred.iter()
        .zip(rows)
        .map(|(p, &i)| (p - y[i]) * (p - y[i]))
        .sum()
}

fn evaluate_subset(
    scaled: &Dataset,
    subset: &[usize],
    config: &BenchmarkConfig,
    evaluator: &dyn Evaluator,
) -> Result<Evaluation> {
    let n = scaled.n();
    let mut x = Array2::zeros((n, subset.len()));
    for (k, &j) in subset.iter().enumerate() {
        x.column_mut(k).assign(&scaled.column(j));
    }
    let y = scaled.target().to_vec();
    let grid = evaluator.grid();

    let per_repeat: Vec<(f64, f64)> = (0..config.repeats)
        .into_par_iter()
        .map(|r| -> Result<(f64, f64)> {
            let (train, test) = split_rows(n, config, r)?;
            let param = if config.cv_folds < 2 || grid.is_empty() {
                evaluator.default_param()
            } else if grid.len() == 1 {
                grid[0]
            } else {
                let k = config.cv_folds;
                let mut err = vec![0.0; grid.len()];
                for f in 0..k {
                    let (lo, hi) = (f * train.len() / k, (f + 1) * train.len() / k);
                    let fold = &train[lo..hi];
                    let rest: Vec<usize> = train[..lo].iter().chain(&train[hi..]).copied().collect();
                    let preds = evaluator.fit_predict(x.view(), &y, &rest, fold, &grid)?;
                    for (e, p) in err.iter_mut().zip(&preds) {
                        *e += squared_error(p, &y, fold);
                    }
                }
                let best = (0..grid.len())
                    .min_by(|&a, &b| err[a].total_cmp(&err[b]).then(a.cmp(&b)))
                    .expect("grid is not empty");
                grid[best]
            };
            let preds = evaluator.fit_predict(x.view(), &y, &train, &test, &[param])?;
            let mse = squared_error(&preds[0], &y, &test) / test.len() as f64;
            if !mse.is_finite() {
                return Err(Error::Numerical {
                    index: r,
                    message: "test MSE is not finite".to_string(),
                });
            }
            Ok((mse, param))
        })
        .collect::<Result<_>>()?;

    let mse: Vec<f64> = per_repeat.iter().map(|p| p.0).collect();
    Ok(Evaluation {
        mse_mean: mean(&mse),
        mse_std: sample_std(&mse),
        tuned_params: per_repeat.iter().map(|p| p.1).collect(),
        mse_per_repeat: mse,
    })
}
