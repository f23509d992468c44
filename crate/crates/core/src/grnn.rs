//! Anisotropic Gaussian GRNN (Nadaraya-Watson) prediction and the
//! leave-one-out loss used to fit its bandwidths.
//!
//! All kernel sums are computed on log weights shifted by their maximum, so
//! the largest weight is exactly 1 and the normalizer can never underflow.
//! Weight sums are accumulated with compensated summation.

use ndarray::{Array1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, compensated_sum_and_dot, exp_shifted_in_place, lane_max};

/// Per-feature kernel widths. Every entry is finite and strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Bandwidths(Vec<f64>);

impl Bandwidths {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::input("bandwidth vector is empty"));
        }
        if let Some((j, s)) = sigma
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && **s > 0.0))
        {
            return Err(Error::input(format!(
                "bandwidth {j} must be finite and positive, got {s}"
            )));
        }
        Ok(Self(sigma))
    }

    /// The isotropic case: every feature shares one width.
    pub fn uniform(d: usize, sigma: f64) -> Result<Self> {
        Self::new(vec![sigma; d])
    }

    pub fn from_log(log_sigma: &[f64]) -> Result<Self> {
        Self::new(log_sigma.iter().map(|t| t.exp()).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_log(&self) -> Vec<f64> {
        self.0.iter().map(|s| s.ln()).collect()
    }

    /// `1 / (2 sigma_j^2)` for each feature.
    fn half_precisions(&self) -> Vec<f64> {
        self.0.iter().map(|s| 0.5 / (s * s)).collect()
    }
}

impl TryFrom<Vec<f64>> for Bandwidths {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Bandwidths> for Vec<f64> {
    fn from(b: Bandwidths) -> Vec<f64> {
        b.0
    }
}

/// Leave-one-out loss with its gradient in log-bandwidth space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub loss: f64,
    /// `d loss / d log(sigma_j)`.
    pub gradient: Vec<f64>,
    pub evaluations: usize,
}

/// Logarithm of the anisotropic Gaussian kernel weight between two points.
pub fn log_kernel(query: &[f64], center: &[f64], sigma: &Bandwidths) -> Result<f64> {
    if query.len() != center.len() || query.len() != sigma.len() {
        return Err(Error::input(format!(
            "dimension mismatch: query {}, center {}, bandwidths {}",
            query.len(),
            center.len(),
            sigma.len()
        )));
    }
    let h = sigma.half_precisions();
    Ok(query
        .iter()
        .zip(center)
        .zip(&h)
        .fold(0.0, |acc, ((q, c), h)| {
            let t = q - c;
            acc - t * t * h
        }))
}

/// Kernel-weighted average of the training targets at `query`.
pub fn predict(train: &Dataset, sigma: &Bandwidths, query: &[f64]) -> Result<f64> {
    let model = KernelModel::new(train);
    model.check_sigma(sigma)?;
    model.check_query(query)?;
    let h = sigma.half_precisions();
    let mut buf = vec![0.0; model.n];
    Ok(model.predict_with(query, &h, None, &mut buf).0)
}

/// [`predict`] applied to every row of `queries`.
pub fn predict_batch(
    train: &Dataset,
    sigma: &Bandwidths,
    queries: ArrayView2<'_, f64>,
) -> Result<Array1<f64>> {
    let model = KernelModel::new(train);
    model.check_sigma(sigma)?;
    if queries.nrows() > 0 && queries.ncols() != model.d {
        return Err(Error::input(format!(
            "queries have {} columns, training data has {}",
            queries.ncols(),
            model.d
        )));
    }
    let h = sigma.half_precisions();
    let out: Vec<f64> = queries
        .outer_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map_init(
            || (vec![0.0; model.n], vec![0.0; model.d]),
            |(buf, q), row| {
                q.iter_mut().zip(row.iter()).for_each(|(a, b)| *a = *b);
                model.predict_with(q, &h, None, buf).0
            },
        )
        .collect();
    Ok(Array1::from(out))
}

/// Leave-one-out mean squared error of the GRNN on its own training set.
pub fn loo_loss(train: &Dataset, sigma: &Bandwidths) -> Result<f64> {
    let model = KernelModel::new(train);
    model.check_sigma(sigma)?;
    Ok(model.loo(&sigma.to_log(), false)?.loss)
}

/// Leave-one-out loss at `sigma = exp(log_sigma)` with its analytic gradient.
pub fn loo_loss_grad(train: &Dataset, log_sigma: &[f64]) -> Result<LossReport> {
    LooObjective::new(train).evaluate(log_sigma)
}

/// Reusable leave-one-out objective over a fixed training set.
///
/// Holds a feature-major copy of the data so repeated evaluations (one per
/// optimizer step) do not pay for the transposition again.
#[derive(Debug, Clone)]
pub struct LooObjective {
    model: KernelModel,
    evaluations: usize,
}

impl LooObjective {
    pub fn new(train: &Dataset) -> Self {
        Self {
            model: KernelModel::new(train),
            evaluations: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.model.d
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn evaluate(&mut self, log_sigma: &[f64]) -> Result<LossReport> {
        self.evaluations += 1;
        let mut report = self.model.loo(log_sigma, true)?;
        report.evaluations = self.evaluations;
        Ok(report)
    }
}

/// Training data laid out feature-major for the O(n^2 d) kernel loops.
#[derive(Debug, Clone)]
struct KernelModel {
    n: usize,
    d: usize,
    /// Column `j` occupies `columns[j * n .. (j + 1) * n]`.
    columns: Vec<f64>,
    target: Vec<f64>,
    target_min: f64,
    target_max: f64,
}

impl KernelModel {
    fn new(train: &Dataset) -> Self {
        let (n, d) = (train.n(), train.d());
        let mut columns = Vec::with_capacity(n * d);
        for j in 0..d {
            columns.extend(train.column(j).iter().copied());
        }
        let target = train.target().to_vec();
        let target_min = target.iter().copied().fold(f64::INFINITY, f64::min);
        let target_max = target.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            n,
            d,
            columns,
            target,
            target_min,
            target_max,
        }
    }

    #[inline]
    fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n..(j + 1) * self.n]
    }

    fn check_sigma(&self, sigma: &Bandwidths) -> Result<()> {
        if sigma.len() != self.d {
            return Err(Error::input(format!(
                "{} bandwidths for {} features",
                sigma.len(),
                self.d
            )));
        }
        Ok(())
    }

    fn check_query(&self, query: &[f64]) -> Result<()> {
        if query.len() != self.d {
            return Err(Error::input(format!(
                "query has {} coordinates, training data has {}",
                query.len(),
                self.d
            )));
        }
        Ok(())
    }

    /// Fills `out[m]` with the log kernel between `query` and training row `m`.
    #[inline]
    fn log_weights(&self, query: &[f64], h: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, (&q, &hj)) in query.iter().zip(h).enumerate() {
            for (o, &x) in out.iter_mut().zip(self.column(j)) {
                let t = q - x;
                *o -= t * t * hj;
            }
        }
    }

    /// Weighted average at `query`, optionally excluding one training row.
    ///
    /// On return `buf` holds the shifted weights (zero at the excluded row);
    /// the second value is their sum.
    fn predict_with(
        &self,
        query: &[f64],
        h: &[f64],
        exclude: Option<usize>,
        buf: &mut [f64],
    ) -> (f64, f64) {
        self.log_weights(query, h, buf);
        if let Some(i) = exclude {
            buf[i] = f64::NEG_INFINITY;
        }
        let max = lane_max(buf);
        exp_shifted_in_place(buf, max);
        let (total, weighted) = compensated_sum_and_dot(buf, &self.target);
        ((weighted / total).clamp(self.target_min, self.target_max), total)
    }

    fn loo(&self, log_sigma: &[f64], with_gradient: bool) -> Result<LossReport> {
        let (n, d) = (self.n, self.d);
        if n < 2 {
            return Err(Error::input("leave-one-out loss needs at least two rows"));
        }
        if log_sigma.len() != d {
            return Err(Error::input(format!(
                "{} log-bandwidths for {d} features",
                log_sigma.len()
            )));
        }
        if let Some(j) = log_sigma.iter().position(|t| !t.is_finite()) {
            return Err(Error::Numerical {
                index: j,
                message: format!("log-bandwidth {} is not finite", log_sigma[j]),
            });
        }
        let h: Vec<f64> = log_sigma.iter().map(|t| 0.5 * (-2.0 * t).exp()).collect();
        if let Some(j) = h.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                index: j,
                message: format!("bandwidth exp({}) is out of range", log_sigma[j]),
            });
        }

        // Row i of `terms` holds the squared residual of held-out point i
        // followed by its d gradient contributions.
        let stride = if with_gradient { d + 1 } else { 1 };
        let mut terms = vec![0.0; n * stride];
        terms
            .par_chunks_mut(stride)
            .enumerate()
            .for_each_init(
                || (vec![0.0; n], vec![0.0; d]),
                |(buf, query), (i, out)| {
                    for (j, q) in query.iter_mut().enumerate() {
                        *q = self.columns[j * n + i];
                    }
                    let (pred, total) = self.predict_with(query, &h, Some(i), buf);
                    let resid = self.target[i] - pred;
                    out[0] = resid * resid;
                    if with_gradient {
                        // d pred / d theta_j = 2 h_j sum_m w_m (y_m - pred) D_imj / total
                        for (w, &y) in buf.iter_mut().zip(&self.target) {
                            *w *= y - pred;
                        }
                        let scale = -2.0 * resid / total;
                        for j in 0..d {
                            let g = weighted_sq_dist(buf, self.column(j), query[j]);
                            out[1 + j] = scale * 2.0 * h[j] * g;
                        }
                    }
                },
            );

        if let Some(pos) = terms.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                index: pos / stride,
                message: "non-finite leave-one-out term".to_string(),
            });
        }
        let inv_n = 1.0 / n as f64;
        let loss = compensated_sum(terms.chunks(stride).map(|row| row[0])) * inv_n;
        let gradient = if with_gradient {
            (0..d)
                .map(|j| compensated_sum(terms.chunks(stride).map(|row| row[1 + j])) * inv_n)
                .collect()
        } else {
            Vec::new()
        };
        Ok(LossReport {
            loss,
            gradient,
            evaluations: 1,
        })
    }
}

/// `sum_m coef[m] * (x[m] - center)^2`, in four independent lanes.
#[inline]
fn weighted_sq_dist(coef: &[f64], x: &[f64], center: f64) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut cc = coef.chunks_exact(4);
    let mut xc = x.chunks_exact(4);
    for (c, v) in (&mut cc).zip(&mut xc) {
        for k in 0..4 {
            let t = v[k] - center;
            acc[k] += c[k] * t * t;
        }
    }
    let mut tail = 0.0;
    for (c, v) in cc.remainder().iter().zip(xc.remainder()) {
        let t = v - center;
        tail += c * t * t;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn two_points() -> Dataset {
        Dataset::with_default_names(array![[0.0], [1.0]], array![0.0, 1.0]).unwrap()
    }

    #[test]
    fn log_kernel_examples() {
        let s1 = Bandwidths::new(vec![1.0]).unwrap();
        assert_eq!(log_kernel(&[0.3], &[0.3], &s1).unwrap(), 0.0);
        assert_eq!(log_kernel(&[1.0], &[0.0], &s1).unwrap(), -0.5);
        let s2 = Bandwidths::uniform(2, 0.5).unwrap();
        let v = log_kernel(&[0.5, 0.25], &[0.0, 0.0], &s2).unwrap();
        assert!((v + 0.625).abs() < 1e-15);
        assert!(matches!(log_kernel(&[0.0], &[0.0, 1.0], &s2), Err(Error::Input(_))));
    }

    #[test]
    fn bandwidths_reject_non_positive() {
        assert!(Bandwidths::new(vec![1.0, 0.0]).is_err());
        assert!(Bandwidths::new(vec![f64::INFINITY]).is_err());
        assert!(Bandwidths::new(vec![]).is_err());
        assert!(serde_json::from_str::<Bandwidths>("[1.0, -2.0]").is_err());
    }

    #[test]
    fn single_training_point_predicts_its_target() {
        let ds = Dataset::with_default_names(array![[0.2]], array![3.0]).unwrap();
        let s = Bandwidths::new(vec![0.01]).unwrap();
        assert_eq!(predict(&ds, &s, &[0.9]).unwrap(), 3.0);
    }

    #[test]
    fn two_point_predictions() {
        let ds = two_points();
        let s = Bandwidths::new(vec![0.5]).unwrap();
        assert!((predict(&ds, &s, &[0.5]).unwrap() - 0.5).abs() < 1e-15);
        let a = (-0.125f64).exp();
        let b = (-1.125f64).exp();
        let expected = b / (a + b);
        assert!((predict(&ds, &s, &[0.25]).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.2690).abs() < 1e-4);
    }

    #[test]
    fn far_query_does_not_underflow() {
        let ds = two_points();
        let s = Bandwidths::new(vec![1e-3]).unwrap();
        // raw weights are exp(-5e11): both underflow without the shift
        let p = predict(&ds, &s, &[1000.0]).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn empty_batch_is_empty() {
        let ds = two_points();
        let s = Bandwidths::new(vec![0.5]).unwrap();
        let q = Array2::<f64>::zeros((0, 1));
        assert_eq!(predict_batch(&ds, &s, q.view()).unwrap().len(), 0);
    }

    #[test]
    fn tiny_bandwidth_interpolates_training_points() {
        let ds = Dataset::with_default_names(
            array![[0.0, 0.1], [0.4, 0.9], [0.8, 0.3]],
            array![1.5, -2.0, 7.0],
        )
        .unwrap();
        let s = Bandwidths::uniform(2, 1e-6).unwrap();
        let pred = predict_batch(&ds, &s, ds.features()).unwrap();
        assert_eq!(pred.to_vec(), vec![1.5, -2.0, 7.0]);
    }

    #[test]
    fn two_point_loo_loss_is_one_and_flat() {
        let ds = two_points();
        for s in [0.01, 0.5, 10.0] {
            let b = Bandwidths::new(vec![s]).unwrap();
            assert_eq!(loo_loss(&ds, &b).unwrap(), 1.0);
            let rep = loo_loss_grad(&ds, &b.to_log()).unwrap();
            assert_eq!(rep.loss, 1.0);
            assert_eq!(rep.gradient, vec![0.0]);
        }
    }

    #[test]
    fn flat_target_has_zero_loss() {
        let ds = Dataset::with_default_names(
            array![[0.0, 1.0], [0.3, 0.2], [0.9, 0.5], [0.1, 0.1]],
            array![2.5, 2.5, 2.5, 2.5],
        )
        .unwrap();
        let b = Bandwidths::uniform(2, 0.3).unwrap();
        assert_eq!(loo_loss(&ds, &b).unwrap(), 0.0);
    }

    #[test]
    fn loo_rejects_non_finite_log_sigma() {
        let ds = two_points();
        let err = loo_loss_grad(&ds, &[f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::Numerical { index: 0, .. }));
        let err = loo_loss_grad(&ds, &[-1e3]).unwrap_err();
        assert!(matches!(err, Error::Numerical { index: 0, .. }));
    }

    #[test]
    fn objective_counts_evaluations() {
        let ds = two_points();
        let mut obj = LooObjective::new(&ds);
        obj.evaluate(&[0.0]).unwrap();
        let rep = obj.evaluate(&[0.1]).unwrap();
        assert_eq!(rep.evaluations, 2);
        assert_eq!(obj.evaluations(), 2);
    }

    #[test]
    fn weighted_sq_dist_handles_tails() {
        let c = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let naive: f64 = c.iter().zip(&x).map(|(c, x)| c * (x - 1.0) * (x - 1.0)).sum();
        assert_eq!(weighted_sq_dist(&c, &x, 1.0), naive);
    }
}
