//! Reference feature-selection methods used for comparison: univariate
//! F-test, histogram mutual information, correlation-based feature selection
//! and RReliefF.

mod cfs;
mod ftest;
mod mi;
mod relief;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cfs::{cfs_merit, cfs_select, CfsResult};
pub use ftest::{ftest_scores, PERFECT_CORRELATION_SCORE};
pub use mi::{mi_scores, DEFAULT_BINS};
pub use relief::{rrelieff_scores, ReliefParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMethod {
    Ftest,
    Mi,
    Rrelieff,
}

impl fmt::Display for ScoreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreMethod::Ftest => "ftest",
            ScoreMethod::Mi => "mi",
            ScoreMethod::Rrelieff => "rrelieff",
        })
    }
}

impl FromStr for ScoreMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ftest" => Ok(ScoreMethod::Ftest),
            "mi" => Ok(ScoreMethod::Mi),
            "rrelieff" | "relieff" => Ok(ScoreMethod::Rrelieff),
            other => Err(Error::input(format!("unknown scoring method '{other}'"))),
        }
    }
}

/// Per-feature relevance scores; higher means more relevant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub method: ScoreMethod,
    pub scores: Vec<f64>,
    pub feature_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// An ordered set of selected columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSubset {
    pub indices: Vec<usize>,
    pub names: Vec<String>,
}

impl FeatureSubset {
    pub fn from_indices(indices: Vec<usize>, feature_names: &[String]) -> Self {
        let names = indices.iter().map(|&j| feature_names[j].clone()).collect();
        Self { indices, names }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Indices of features ordered by decreasing score, ties by ascending index.
pub fn ranking(scores: &ScoreVector) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores.scores[b]
            .total_cmp(&scores.scores[a])
            .then(a.cmp(&b))
    });
    idx
}

/// The `k` highest-scoring features, returned in ranking order.
pub fn top_k(scores: &ScoreVector, k: usize) -> Result<FeatureSubset> {
    let d = scores.scores.len();
    if k == 0 || k > d {
        return Err(Error::input(format!("k must be in 1..={d}, got {k}")));
    }
    let mut idx = ranking(scores);
    idx.truncate(k);
    Ok(FeatureSubset::from_indices(idx, &scores.feature_names))
}

/// Features with a strictly positive score, the usual RReliefF cut.
pub fn positive_scores(scores: &ScoreVector) -> FeatureSubset {
    let idx = ranking(scores)
        .into_iter()
        .filter(|&j| scores.scores[j] > 0.0)
        .collect();
    FeatureSubset::from_indices(idx, &scores.feature_names)
}
