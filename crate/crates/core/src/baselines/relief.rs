use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::permutation;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

use super::{ScoreMethod, ScoreVector};

/// Width of the exponential decay over neighbor ranks.
const RANK_SCALE: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliefParams {
    pub k_neighbors: usize,
    /// Number of reference instances; `None` uses every row in order.
    pub sample_size: Option<usize>,
    pub seed: u64,
}

impl Default for ReliefParams {
    fn default() -> Self {
        Self {
            k_neighbors: 10,
            sample_size: None,
            seed: 0,
        }
    }
}

/// RReliefF relevance estimates for a continuous target.
///
/// Features are min-max scaled first, so every attribute difference lies in
/// `[0, 1]`; target differences are divided by the target range. Neighbors
/// are the `k` nearest rows in Euclidean distance, ties broken by row index,
/// and contributions are weighted by `exp(-(rank / 20)^2)` normalized over
/// the `k` ranks.
pub fn rrelieff_scores(dataset: &Dataset, params: &ReliefParams) -> Result<ScoreVector> {
    let (n, d) = (dataset.n(), dataset.d());
    let k = params.k_neighbors;
    if k == 0 {
        return Err(Error::input("k_neighbors must be positive"));
    }
    if k >= n {
        return Err(Error::input(format!("k_neighbors ({k}) must be smaller than n ({n})")));
    }
    let m = params.sample_size.unwrap_or(n);
    if m == 0 || m > n {
        return Err(Error::input(format!("sample_size must be in 1..={n}, got {m}")));
    }
    let reference: Vec<usize> = if m == n {
        (0..n).collect()
    } else {
        let mut p = permutation(n, params.seed);
        p.truncate(m);
        p
    };

    let scaled = dataset.min_max_scale(false)?;
    let x = scaled.features().as_standard_layout().into_owned();
    let x = x.as_slice().expect("standard layout");
    let y = dataset.target();
    let (ylo, yhi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let yrange = if yhi > ylo { yhi - ylo } else { 1.0 };

    let raw: Vec<f64> = (1..=k)
        .map(|r| (-(r as f64 / RANK_SCALE).powi(2)).exp())
        .collect();
    let norm: f64 = raw.iter().sum();
    let rank_weight: Vec<f64> = raw.iter().map(|w| w / norm).collect();

    // per reference instance: [N_dC, N_dA[0..d], N_dC&dA[0..d]]
    let stride = 1 + 2 * d;
    let mut acc = vec![0.0; m * stride];
    acc.par_chunks_mut(stride)
        .zip(reference.par_iter())
        .for_each_init(
            || Vec::with_capacity(n),
            |cand: &mut Vec<(f64, usize)>, (out, &i)| {
                let xi = &x[i * d..(i + 1) * d];
                cand.clear();
                for r in (0..n).filter(|&r| r != i) {
                    let xr = &x[r * d..(r + 1) * d];
                    let dist: f64 = xi.iter().zip(xr).map(|(a, b)| (a - b) * (a - b)).sum();
                    cand.push((dist, r));
                }
                let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                cand.select_nth_unstable_by(k - 1, by_dist);
                cand[..k].sort_by(by_dist);

                let (ndc, rest) = out.split_first_mut().expect("stride >= 1");
                let (nda, ndcda) = rest.split_at_mut(d);
                for (&(_, r), &w) in cand[..k].iter().zip(&rank_weight) {
                    let dy = (y[i] - y[r]).abs() / yrange;
                    *ndc += dy * w;
                    let xr = &x[r * d..(r + 1) * d];
                    for j in 0..d {
                        let da = (xi[j] - xr[j]).abs();
                        nda[j] += da * w;
                        ndcda[j] += dy * da * w;
                    }
                }
            },
        );

    let column = |c: usize| compensated_sum(acc.chunks(stride).map(|row| row[c]));
    let ndc = column(0);
    let mf = m as f64;
    let scores = (0..d)
        .map(|j| {
            let nda = column(1 + j);
            let ndcda = column(1 + d + j);
            let first = if ndc > 0.0 { ndcda / ndc } else { 0.0 };
            let second = if mf - ndc > 0.0 {
                (nda - ndcda) / (mf - ndc)
            } else {
                0.0
            };
            first - second
        })
        .collect();
    let mut warnings = Vec::new();
    if yhi == ylo {
        warnings.push("target is constant; RReliefF scores are uninformative".to_string());
    }
    Ok(ScoreVector {
        method: ScoreMethod::Rrelieff,
        scores,
        feature_names: dataset.feature_names().to_vec(),
        warnings,
    })
}
