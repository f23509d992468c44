//! Seeded synthetic datasets and column shuffling.
//!
//! Every generator is a pure function of its spec: the RNG stream is
//! created from the supplied seed on each call.

use ndarray::{Array1, Array2};
use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Seed of the canonical Butterfly network weights.
pub const DEFAULT_WEIGHT_SEED: u64 = 17;

pub const BUTTERFLY_FEATURES: [&str; 8] = ["X1", "X2", "J3", "J4", "J5", "I6", "I7", "I8"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ButterflySpec {
    pub n: usize,
    pub seed: u64,
    pub hidden_units: usize,
    pub weight_seed: u64,
}

impl ButterflySpec {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            hidden_units: 10,
            weight_seed: DEFAULT_WEIGHT_SEED,
        }
    }
}

/// Single-hidden-layer tanh network mapping `(X1, X2)` to the Butterfly target.
#[derive(Debug, Clone, PartialEq)]
pub struct ButterflyNetwork {
    input_weights: Vec<[f64; 2]>,
    biases: Vec<f64>,
    output_weights: Vec<f64>,
    output_bias: f64,
}

impl ButterflyNetwork {
    /// Draws all weights i.i.d. standard normal: per hidden unit the two
    /// input weights, the bias and the output weight, then the output bias.
    pub fn from_seed(hidden_units: usize, weight_seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(weight_seed);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut input_weights = Vec::with_capacity(hidden_units);
        let mut biases = Vec::with_capacity(hidden_units);
        let mut output_weights = Vec::with_capacity(hidden_units);
        for _ in 0..hidden_units {
            input_weights.push([draw(), draw()]);
            biases.push(draw());
            output_weights.push(draw());
        }
        let output_bias = draw();
        Self {
            input_weights,
            biases,
            output_weights,
            output_bias,
        }
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        let hidden: f64 = self
            .input_weights
            .iter()
            .zip(&self.biases)
            .zip(&self.output_weights)
            .map(|((w, b), v)| v * (w[0] * x1 + w[1] * x2 + b).tanh())
            .sum();
        hidden + self.output_bias
    }
}

/// Derived Butterfly columns `(J3, J4, J5)` from the two relevant inputs.
pub fn butterfly_redundant(x1: f64, x2: f64) -> [f64; 3] {
    let (a, b) = (x1 * x1, x2 * x2);
    [(x1 + 5.0).log10(), a - b, a * a - b * b]
}

/// Derived Butterfly columns `(I7, I8)` from the irrelevant input.
pub fn butterfly_irrelevant(i6: f64) -> [f64; 2] {
    let i7 = (i6 + 5.0).log10();
    [i7, i6 + i7]
}

/// Butterfly dataset: 2 relevant, 3 redundant and 3 irrelevant features.
pub fn gen_butterfly(spec: &ButterflySpec) -> Result<Dataset> {
    if spec.n < 2 {
        return Err(Error::input("butterfly needs n >= 2"));
    }
    if spec.hidden_units == 0 {
        return Err(Error::input("butterfly needs at least one hidden unit"));
    }
    let net = ButterflyNetwork::from_seed(spec.hidden_units, spec.weight_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut uniform = || -> f64 {
        let u: f64 = rng.sample(Open01);
        -5.0 + 10.0 * u
    };
    let mut features = Array2::zeros((spec.n, BUTTERFLY_FEATURES.len()));
    let mut target = Array1::zeros(spec.n);
    for (mut row, y) in features.rows_mut().into_iter().zip(target.iter_mut()) {
        let x1 = uniform();
        let x2 = uniform();
        let i6 = uniform();
        let [j3, j4, j5] = butterfly_redundant(x1, x2);
        let [i7, i8] = butterfly_irrelevant(i6);
        for (cell, v) in row.iter_mut().zip([x1, x2, j3, j4, j5, i6, i7, i8]) {
            *cell = v;
        }
        *y = net.eval(x1, x2);
    }
    let names = BUTTERFLY_FEATURES.iter().map(|s| s.to_string()).collect();
    Dataset::new(features, target, names)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanSpec {
    pub n: usize,
    pub d: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl FriedmanSpec {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            d: 30,
            noise_sd: 1.0,
            seed,
        }
    }
}

/// Noise-free Friedman #1 response; only the first five coordinates matter.
pub fn friedman_response(x: &[f64]) -> f64 {
    10.0 * (std::f64::consts::PI * x[0] * x[1]).sin()
        + 20.0 * (x[2] - 0.5).powi(2)
        + 10.0 * x[3]
        + 5.0 * x[4]
}

/// Friedman #1: `d` uniform features on `[0, 1]`, the first five relevant.
pub fn gen_friedman(spec: &FriedmanSpec) -> Result<Dataset> {
    if spec.d < 5 {
        return Err(Error::input(format!("friedman needs d >= 5, got {}", spec.d)));
    }
    if spec.n < 2 {
        return Err(Error::input("friedman needs n >= 2"));
    }
    let noise = Normal::new(0.0, spec.noise_sd)
        .map_err(|_| Error::input(format!("invalid noise_sd {}", spec.noise_sd)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut features = Array2::zeros((spec.n, spec.d));
    let mut target = Array1::zeros(spec.n);
    for (mut row, y) in features.rows_mut().into_iter().zip(target.iter_mut()) {
        row.iter_mut().for_each(|v| *v = rng.random::<f64>());
        let eps = if spec.noise_sd > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        *y = friedman_response(row.as_slice().expect("rows are contiguous")) + eps;
    }
    Dataset::with_default_names(features, target)
}

/// Seeded Fisher-Yates permutation of `0..n`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Copy of `dataset` with one column permuted; everything else untouched.
pub fn shuffle_column(dataset: &Dataset, feature: &str, seed: u64) -> Result<Dataset> {
    let j = dataset.feature_index(feature)?;
    let perm = permutation(dataset.n(), seed);
    let col = dataset.column(j);
    let shuffled = perm.iter().map(|&i| col[i]).collect::<Array1<f64>>();
    dataset.with_column(j, shuffled)
}
