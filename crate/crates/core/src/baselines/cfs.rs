use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numeric::pearson;

use super::FeatureSubset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfsResult {
    pub selected: FeatureSubset,
    pub merit: f64,
    /// Every candidate subset scored during the search, with its merit.
    pub visited: Vec<(Vec<usize>, f64)>,
    pub warnings: Vec<String>,
}

/// `k * mean|r_cf| / sqrt(k + k (k - 1) mean|r_ff|)`, written with sums:
/// `sum|r_cf| / sqrt(k + 2 sum_{pairs}|r_ff|)`. The empty set has merit 0.
pub fn cfs_merit(subset: &[usize], target_corr: &[f64], feature_corr: &[Vec<f64>]) -> f64 {
    let k = subset.len();
    if k == 0 {
        return 0.0;
    }
    let rcf: f64 = subset.iter().map(|&j| target_corr[j]).sum();
    let mut rff = 0.0;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            rff += feature_corr[i][j];
        }
    }
    let denom = (k as f64 + 2.0 * rff).sqrt();
    if denom > 0.0 {
        rcf / denom
    } else {
        0.0
    }
}

/// Greedy forward search on the CFS merit with absolute Pearson correlations.
///
/// Each step adds the candidate with the highest merit (lowest index on
/// ties) and stops as soon as no candidate strictly improves the merit.
pub fn cfs_select(dataset: &Dataset) -> Result<CfsResult> {
    let (n, d) = (dataset.n(), dataset.d());
    if n < 3 {
        return Err(Error::input("CFS needs at least three rows"));
    }
    let y = dataset.target().to_vec();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| dataset.column(j).to_vec()).collect();
    let target_corr: Vec<f64> = cols.iter().map(|c| pearson(c, &y).abs()).collect();
    let mut feature_corr = vec![vec![0.0; d]; d];
    for i in 0..d {
        feature_corr[i][i] = 1.0;
        for j in i + 1..d {
            let r = pearson(&cols[i], &cols[j]).abs();
            feature_corr[i][j] = r;
            feature_corr[j][i] = r;
        }
    }

    let mut selected: Vec<usize> = Vec::new();
    let mut merit = 0.0;
    let mut visited = Vec::new();
    loop {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..d).filter(|j| !selected.contains(j)) {
            let mut candidate = selected.clone();
            candidate.push(j);
            let m = cfs_merit(&candidate, &target_corr, &feature_corr);
            visited.push((candidate, m));
            if best.is_none_or(|(_, bm)| m > bm) {
                best = Some((j, m));
            }
        }
        match best {
            Some((j, m)) if m > merit => {
                selected.push(j);
                merit = m;
            }
            _ => break,
        }
    }

    let mut warnings = Vec::new();
    if selected.is_empty() {
        warnings.push("no feature correlates with the target; empty selection".to_string());
    }
    Ok(CfsResult {
        selected: FeatureSubset::from_indices(selected, dataset.feature_names()),
        merit,
        visited,
        warnings,
    })
}
