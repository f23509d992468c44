use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numeric::pearson;

use super::{ScoreMethod, ScoreVector};

/// Score assigned when a feature is perfectly correlated with the target.
pub const PERFECT_CORRELATION_SCORE: f64 = 1e12;

/// Univariate regression F statistic, `r^2 (n - 2) / (1 - r^2)`, per feature.
pub fn ftest_scores(dataset: &Dataset) -> Result<ScoreVector> {
    let n = dataset.n();
    if n < 3 {
        return Err(Error::input("F-test needs at least three rows"));
    }
    let y = dataset.target().to_vec();
    let mut warnings = Vec::new();
    let scores = (0..dataset.d())
        .map(|j| {
            let x = dataset.column(j).to_vec();
            if x.iter().all(|&v| v == x[0]) {
                warnings.push(format!(
                    "feature '{}' is constant; F score set to 0",
                    dataset.feature_names()[j]
                ));
                return 0.0;
            }
            let r2 = pearson(&x, &y).powi(2);
            let resid = 1.0 - r2;
            if resid <= f64::EPSILON {
                PERFECT_CORRELATION_SCORE
            } else {
                (r2 * (n - 2) as f64 / resid).min(PERFECT_CORRELATION_SCORE)
            }
        })
        .collect();
    Ok(ScoreVector {
        method: ScoreMethod::Ftest,
        scores,
        feature_names: dataset.feature_names().to_vec(),
        warnings,
    })
}
