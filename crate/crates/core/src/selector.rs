//! AGRNN selector: scale features to `[0, 1]`, fit one bandwidth per feature
//! by minimizing the leave-one-out loss, keep features with `sigma <= threshold`.
//!
//! Also hosts the shuffle experiment: destroy one column by permutation,
//! refit, and compare the bandwidths against an unshuffled baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::datagen;
use crate::error::{Error, Result};
use crate::grnn::{Bandwidths, LooObjective};
use crate::numeric::{derive_seed, MeanCi};
use crate::optimizer::{minimize, InitSigma, OptimResult, OptimizerConfig, TerminationReason};

pub const DEFAULT_THRESHOLD: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub feature_names: Vec<String>,
    pub sigma_opt: Bandwidths,
    pub relevant_mask: Vec<bool>,
    pub threshold: f64,
    pub optim: OptimResult,
    pub config: OptimizerConfig,
    pub warnings: Vec<String>,
}

impl SelectionResult {
    pub fn selected_indices(&self) -> Vec<usize> {
        self.relevant_mask
            .iter()
            .enumerate()
            .filter_map(|(j, &keep)| keep.then_some(j))
            .collect()
    }

    pub fn selected_names(&self) -> Vec<String> {
        self.selected_indices()
            .into_iter()
            .map(|j| self.feature_names[j].clone())
            .collect()
    }

    pub fn sigma_of(&self, feature: &str) -> Option<f64> {
        let j = self.feature_names.iter().position(|f| f == feature)?;
        Some(self.sigma_opt.as_slice()[j])
    }
}

/// Runs the selector on a raw dataset.
///
/// Features are rescaled here (the target is left alone). A bandwidth equal
/// to the threshold counts as relevant; constant columns are never relevant.
pub fn select(dataset: &Dataset, config: &OptimizerConfig, threshold: f64) -> Result<SelectionResult> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::input(format!("threshold must be positive, got {threshold}")));
    }
    config.validate()?;
    let scaled = dataset.min_max_scale(false)?;
    let names = scaled.feature_names().to_vec();
    let mut warnings = scaled
        .scaler()
        .map(|s| s.warnings(&names))
        .unwrap_or_default();

    let init = config.initial_log_sigma(scaled.d())?;
    let mut objective = LooObjective::new(&scaled);
    let optim = minimize(
        |theta: &[f64]| objective.evaluate(theta).map(|r| (r.loss, r.gradient)),
        &init,
        config,
    )?;
    let sigma_opt = Bandwidths::from_log(&optim.theta_opt).map_err(|_| Error::Numerical {
        index: optim
            .theta_opt
            .iter()
            .position(|t| !t.exp().is_finite() || t.exp() <= 0.0)
            .unwrap_or(0),
        message: "optimized bandwidth is out of range".to_string(),
    })?;

    let constant = scaled.constant_features();
    let relevant_mask: Vec<bool> = sigma_opt
        .as_slice()
        .iter()
        .enumerate()
        .map(|(j, &s)| s <= threshold && !constant.contains(&j))
        .collect();

    match optim.termination_reason {
        TerminationReason::LineSearchFailure => warnings
            .push("line search failed to decrease the loss; returning the best iterate".into()),
        TerminationReason::MaxIterations => {
            warnings.push(format!("stopped after {} iterations without converging", optim.iterations))
        }
        _ => {}
    }
    if !relevant_mask.iter().any(|&k| k) {
        warnings.push("no feature selected".into());
    }
    Ok(SelectionResult {
        feature_names: names,
        sigma_opt,
        relevant_mask,
        threshold,
        optim,
        config: config.clone(),
        warnings,
    })
}

/// Where the shuffle experiment gets its data from.
#[derive(Clone, Copy)]
pub enum DataSource<'a> {
    /// One dataset; baseline variability comes from jittered optimizer starts.
    Fixed(&'a Dataset),
    /// A fresh dataset per repeat, generated from a derived seed.
    Generated(&'a (dyn Fn(u64) -> Result<Dataset> + Sync)),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRun {
    pub repeat: usize,
    pub data_seed: Option<u64>,
    pub permutation_seed: u64,
    pub baseline_sigma: Vec<f64>,
    pub shuffled_sigma: Vec<f64>,
    pub baseline_optim: OptimResult,
    pub shuffled_optim: OptimResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub feature: String,
    pub repeats: usize,
    pub threshold: f64,
    pub feature_names: Vec<String>,
    pub sigma_baseline: Vec<MeanCi>,
    pub sigma_shuffled: Vec<MeanCi>,
    /// Baseline mean at or below the threshold, shuffled mean above it.
    pub crossed_threshold: bool,
    pub runs: Vec<ImportanceRun>,
}

impl ImportanceReport {
    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }
}

/// Shuffle experiment with seeded Fisher-Yates permutations.
pub fn shuffle_importance(
    source: DataSource<'_>,
    feature: &str,
    config: &OptimizerConfig,
    threshold: f64,
    repeats: usize,
    seed: u64,
) -> Result<ImportanceReport> {
    shuffle_importance_with(source, feature, config, threshold, repeats, seed, &datagen::permutation)
}

const DATA_STREAM: u64 = 1;
const PERMUTATION_STREAM: u64 = 2;
const JITTER_STREAM: u64 = 3;

/// [`shuffle_importance`] with a caller-supplied permutation generator
/// `(n, seed) -> permutation of 0..n`.
pub fn shuffle_importance_with(
    source: DataSource<'_>,
    feature: &str,
    config: &OptimizerConfig,
    threshold: f64,
    repeats: usize,
    seed: u64,
    permutation: &(dyn Fn(usize, u64) -> Vec<usize> + Sync),
) -> Result<ImportanceReport> {
    if repeats == 0 {
        return Err(Error::input("repeats must be positive"));
    }
    config.validate()?;

    let runs: Vec<ImportanceRun> = (0..repeats)
        .into_par_iter()
        .map(|r| -> Result<ImportanceRun> {
            let (data, data_seed, baseline_config) = match source {
                DataSource::Fixed(ds) => {
                    let cfg = jittered_config(config, ds.d(), r, seed)?;
                    (ds.clone(), None, cfg)
                }
                DataSource::Generated(generate) => {
                    let s = derive_seed(seed, DATA_STREAM, r as u64);
                    (generate(s)?, Some(s), config.clone())
                }
            };
            let j = data.feature_index(feature)?;
            let permutation_seed = derive_seed(seed, PERMUTATION_STREAM, r as u64);
            let perm = permutation(data.n(), permutation_seed);
            if perm.len() != data.n() {
                return Err(Error::input("permutation has the wrong length"));
            }
            let col = data.column(j);
            let shuffled = data.with_column(j, perm.iter().map(|&i| col[i]).collect())?;

            let base = select(&data, &baseline_config, threshold)?;
            let shuf = select(&shuffled, &baseline_config, threshold)?;
            Ok(ImportanceRun {
                repeat: r,
                data_seed,
                permutation_seed,
                baseline_sigma: base.sigma_opt.as_slice().to_vec(),
                shuffled_sigma: shuf.sigma_opt.as_slice().to_vec(),
                baseline_optim: base.optim,
                shuffled_optim: shuf.optim,
            })
        })
        .collect::<Result<_>>()?;

    let feature_names = match source {
        DataSource::Fixed(ds) => ds.feature_names().to_vec(),
        DataSource::Generated(generate) => {
            generate(derive_seed(seed, DATA_STREAM, 0))?.feature_names().to_vec()
        }
    };
    let d = feature_names.len();
    let aggregate = |pick: fn(&ImportanceRun) -> &Vec<f64>| -> Vec<MeanCi> {
        (0..d)
            .map(|j| MeanCi::from_samples(&runs.iter().map(|run| pick(run)[j]).collect::<Vec<_>>()))
            .collect()
    };
    let sigma_baseline = aggregate(|r| &r.baseline_sigma);
    let sigma_shuffled = aggregate(|r| &r.shuffled_sigma);
    let j = feature_names
        .iter()
        .position(|f| f == feature)
        .ok_or_else(|| Error::input(format!("unknown feature '{feature}'")))?;
    let crossed_threshold =
        sigma_baseline[j].mean <= threshold && sigma_shuffled[j].mean > threshold;

    Ok(ImportanceReport {
        feature: feature.to_string(),
        repeats,
        threshold,
        feature_names,
        sigma_baseline,
        sigma_shuffled,
        crossed_threshold,
        runs,
    })
}

/// Repeat 0 starts from the configured point; later repeats get the same
/// log-normal jitter the optimizer uses for restarts.
fn jittered_config(
    config: &OptimizerConfig,
    d: usize,
    repeat: usize,
    seed: u64,
) -> Result<OptimizerConfig> {
    if repeat == 0 {
        return Ok(config.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, JITTER_STREAM, repeat as u64));
    let init = config
        .initial_log_sigma(d)?
        .into_iter()
        .map(|t| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (t + 0.5 * z).exp()
        })
        .collect();
    Ok(OptimizerConfig {
        init_sigma: InitSigma::Vector(init),
        ..config.clone()
    })
}
