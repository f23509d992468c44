use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum_and_dot, exp_shifted_in_place, lane_max};

/// A regressor the harness can tune and score.
///
/// Implementations see the full (already column-subset) feature matrix but
/// must only use the rows listed in `train` to predict the rows in `test`.
pub trait Evaluator: Sync {
    fn name(&self) -> &str;

    /// Hyperparameter values searched by cross-validation.
    fn grid(&self) -> Vec<f64>;

    /// Hyperparameter used when no cross-validation takes place.
    fn default_param(&self) -> f64;

    /// Predictions for `test`, one vector per entry of `params`.
    fn fit_predict(
        &self,
        x: ArrayView2<'_, f64>,
        y: &[f64],
        train: &[usize],
        test: &[usize],
        params: &[f64],
    ) -> Result<Vec<Vec<f64>>>;
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn row(x: &ArrayView2<'_, f64>, i: usize) -> Vec<f64> {
    x.row(i).to_vec()
}

/// k-nearest-neighbor regression: mean target of the `k` closest training
/// rows in Euclidean distance, ties broken by row index.
#[derive(Debug, Clone)]
pub struct Knn {
    pub k_grid: Vec<usize>,
    pub default_k: usize,
}

impl Default for Knn {
    fn default() -> Self {
        Self {
            k_grid: vec![1, 3, 5, 7, 9],
            default_k: 5,
        }
    }
}

impl Evaluator for Knn {
    fn name(&self) -> &str {
        "knn"
    }

    fn grid(&self) -> Vec<f64> {
        self.k_grid.iter().map(|&k| k as f64).collect()
    }

    fn default_param(&self) -> f64 {
        self.default_k as f64
    }

    fn fit_predict(
        &self,
        x: ArrayView2<'_, f64>,
        y: &[f64],
        train: &[usize],
        test: &[usize],
        params: &[f64],
    ) -> Result<Vec<Vec<f64>>> {
        if train.is_empty() {
            return Err(Error::input("k-NN needs at least one training row"));
        }
        let ks: Vec<usize> = params
            .iter()
            .map(|&p| (p.round().max(1.0) as usize).min(train.len()))
            .collect();
        let kmax = ks.iter().copied().max().unwrap_or(1);
        let train_rows: Vec<Vec<f64>> = train.iter().map(|&i| row(&x, i)).collect();
        let mut out = vec![Vec::with_capacity(test.len()); params.len()];
        let mut cand: Vec<(f64, usize)> = Vec::with_capacity(train.len());
        for &t in test {
            let q = row(&x, t);
            cand.clear();
            cand.extend(train.iter().zip(&train_rows).map(|(&i, r)| (sq_dist(&q, r), i)));
            let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if kmax < cand.len() {
                cand.select_nth_unstable_by(kmax - 1, by_dist);
            }
            cand[..kmax].sort_by(by_dist);
            for (pred, &k) in out.iter_mut().zip(&ks) {
                let s: f64 = cand[..k].iter().map(|&(_, i)| y[i]).sum();
                pred.push(s / k as f64);
            }
        }
        Ok(out)
    }
}

/// GRNN with one shared bandwidth for every feature.
#[derive(Debug, Clone)]
pub struct GrnnIsotropic {
    pub sigma_grid: Vec<f64>,
    pub default_sigma: f64,
}

impl Default for GrnnIsotropic {
    /// Ten log-spaced bandwidths from 0.01 to 1.
    fn default() -> Self {
        let sigma_grid = (0..10)
            .map(|i| 10f64.powf(-2.0 + 2.0 * i as f64 / 9.0))
            .collect();
        Self {
            sigma_grid,
            default_sigma: 0.1,
        }
    }
}

impl Evaluator for GrnnIsotropic {
    fn name(&self) -> &str {
        "grnn-isotropic"
    }

    fn grid(&self) -> Vec<f64> {
        self.sigma_grid.clone()
    }

    fn default_param(&self) -> f64 {
        self.default_sigma
    }

    fn fit_predict(
        &self,
        x: ArrayView2<'_, f64>,
        y: &[f64],
        train: &[usize],
        test: &[usize],
        params: &[f64],
    ) -> Result<Vec<Vec<f64>>> {
        if train.is_empty() {
            return Err(Error::input("GRNN needs at least one training row"));
        }
        if let Some(bad) = params.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::input(format!("bandwidth must be positive, got {bad}")));
        }
        let train_rows: Vec<Vec<f64>> = train.iter().map(|&i| row(&x, i)).collect();
        let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let mut out = vec![Vec::with_capacity(test.len()); params.len()];
        let mut dist = vec![0.0; train.len()];
        let mut w = vec![0.0; train.len()];
        for &t in test {
            let q = row(&x, t);
            for (d, r) in dist.iter_mut().zip(&train_rows) {
                *d = sq_dist(&q, r);
            }
            for (pred, &sigma) in out.iter_mut().zip(params) {
                let h = 0.5 / (sigma * sigma);
                for (wi, &d) in w.iter_mut().zip(&dist) {
                    *wi = -h * d;
                }
                let shift = lane_max(&w);
                exp_shifted_in_place(&mut w, shift);
                let (total, dot) = compensated_sum_and_dot(&w, &ty);
                pred.push(dot / total);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn knn_averages_nearest() {
        let x = array![[0.0], [1.0], [2.0], [10.0]];
        let y = [0.0, 1.0, 2.0, 10.0];
        let p = Knn::default()
            .fit_predict(x.view(), &y, &[0, 1, 2], &[3], &[1.0, 2.0, 9.0])
            .unwrap();
        assert_eq!(p, vec![vec![2.0], vec![1.5], vec![1.0]]);
    }

    #[test]
    fn knn_ties_go_to_lower_index() {
        let x = array![[0.0], [2.0], [1.0]];
        let y = [5.0, 7.0, 0.0];
        let p = Knn::default()
            .fit_predict(x.view(), &y, &[0, 1], &[2], &[1.0])
            .unwrap();
        assert_eq!(p[0], vec![5.0]);
    }

    #[test]
    fn grnn_grid_endpoints() {
        let g = GrnnIsotropic::default().grid();
        assert_eq!(g.len(), 10);
        assert!((g[0] - 0.01).abs() < 1e-15);
        assert!((g[9] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grnn_small_sigma_is_nearest_neighbor() {
        let x = array![[0.0], [1.0], [0.9]];
        let y = [3.0, 8.0, 0.0];
        let p = GrnnIsotropic::default()
            .fit_predict(x.view(), &y, &[0, 1], &[2], &[1e-3, 1e6])
            .unwrap();
        assert_eq!(p[0][0], 8.0);
        assert!((p[1][0] - 5.5).abs() < 1e-9);
    }
}
