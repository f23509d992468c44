use ndarray::ArrayView1;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

use super::{ScoreMethod, ScoreVector};

pub const DEFAULT_BINS: usize = 10;

/// Equal-width bin index of every value; a constant column lands in bin 0.
fn bin_indices(values: ArrayView1<'_, f64>, bins: usize) -> Vec<usize> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi == lo {
        return vec![0; values.len()];
    }
    values
        .iter()
        .map(|&v| {
            let u = (v - lo) / (hi - lo);
            ((u * bins as f64) as usize).min(bins - 1)
        })
        .collect()
}

/// Plug-in mutual information (nats) between each feature and the target
/// from a `bins x bins` equal-width joint histogram.
pub fn mi_scores(dataset: &Dataset, bins: usize) -> Result<ScoreVector> {
    if bins == 0 {
        return Err(Error::input("bins must be positive"));
    }
    let n = dataset.n();
    if n < bins {
        return Err(Error::input(format!("mutual information needs n >= bins ({n} < {bins})")));
    }
    let ybins = bin_indices(dataset.target(), bins);
    let mut py = vec![0usize; bins];
    for &b in &ybins {
        py[b] += 1;
    }
    let nf = n as f64;
    let scores = (0..dataset.d())
        .map(|j| {
            let xbins = bin_indices(dataset.column(j), bins);
            let mut joint = vec![0usize; bins * bins];
            let mut px = vec![0usize; bins];
            for (&bx, &by) in xbins.iter().zip(&ybins) {
                joint[bx * bins + by] += 1;
                px[bx] += 1;
            }
            let mut mi = CompensatedSum::new();
            for bx in 0..bins {
                for by in 0..bins {
                    let c = joint[bx * bins + by];
                    if c > 0 {
                        let c = c as f64;
                        mi.add(c / nf * (c * nf / (px[bx] as f64 * py[by] as f64)).ln());
                    }
                }
            }
            mi.value().max(0.0)
        })
        .collect();
    Ok(ScoreVector {
        method: ScoreMethod::Mi,
        scores,
        feature_names: dataset.feature_names().to_vec(),
        warnings: Vec::new(),
    })
}
