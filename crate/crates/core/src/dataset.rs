//! Tabular regression data and min-max scaling.

use std::collections::HashSet;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column `(min, max)` of the data before scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub feature_ranges: Vec<(f64, f64)>,
    pub target_range: Option<(f64, f64)>,
}

impl ScalingRecord {
    /// A column is constant when its observed range is empty; such columns scale to 0.
    pub fn is_constant(&self, feature: usize) -> bool {
        let (lo, hi) = self.feature_ranges[feature];
        hi == lo
    }

    pub fn constant_features(&self) -> Vec<usize> {
        (0..self.feature_ranges.len())
            .filter(|&j| self.is_constant(j))
            .collect()
    }

    pub fn target_is_constant(&self) -> bool {
        matches!(self.target_range, Some((lo, hi)) if lo == hi)
    }

    pub fn warnings(&self, feature_names: &[String]) -> Vec<String> {
        let mut out: Vec<String> = self
            .constant_features()
            .into_iter()
            .map(|j| format!("feature '{}' is constant; scaled to 0", feature_names[j]))
            .collect();
        if self.target_is_constant() {
            out.push("target is constant; scaled to 0".to_string());
        }
        out
    }

    /// Maps a raw feature vector into the scaled space.
    pub fn transform_point(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(&self.feature_ranges)
            .map(|(&v, &(lo, hi))| scale_value(v, lo, hi))
            .collect()
    }

    pub fn inverse_point(&self, scaled: &[f64]) -> Vec<f64> {
        scaled
            .iter()
            .zip(&self.feature_ranges)
            .map(|(&v, &(lo, hi))| unscale_value(v, lo, hi))
            .collect()
    }

    pub fn transform_target(&self, raw: f64) -> f64 {
        match self.target_range {
            Some((lo, hi)) => scale_value(raw, lo, hi),
            None => raw,
        }
    }

    pub fn inverse_target(&self, scaled: f64) -> f64 {
        match self.target_range {
            Some((lo, hi)) => unscale_value(scaled, lo, hi),
            None => scaled,
        }
    }
}

#[inline]
fn scale_value(v: f64, lo: f64, hi: f64) -> f64 {
    if hi == lo {
        0.0
    } else {
        (v - lo) / (hi - lo)
    }
}

#[inline]
fn unscale_value(v: f64, lo: f64, hi: f64) -> f64 {
    if hi == lo {
        lo
    } else {
        lo + v * (hi - lo)
    }
}

fn column_range(col: ArrayView1<'_, f64>) -> (f64, f64) {
    col.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// An `n x d` feature matrix with a length-`n` target.
///
/// All entries are finite and feature names are distinct. Instances are
/// immutable; every transformation returns a new dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    target: Array1<f64>,
    feature_names: Vec<String>,
    scaler: Option<ScalingRecord>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        target: Array1<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 {
            return Err(Error::invalid("dataset has no rows"));
        }
        if d == 0 {
            return Err(Error::invalid("dataset has no features"));
        }
        if target.len() != n {
            return Err(Error::invalid(format!(
                "target has {} entries but the feature matrix has {n} rows",
                target.len()
            )));
        }
        if feature_names.len() != d {
            return Err(Error::invalid(format!(
                "{} feature names supplied for {d} columns",
                feature_names.len()
            )));
        }
        let mut seen = HashSet::with_capacity(d);
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name '{name}'")));
            }
        }
        if let Some(((i, j), v)) = features.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite feature value {v} at row {i}, column {j}"
            )));
        }
        if let Some((i, v)) = target.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite target value {v} at row {i}")));
        }
        Ok(Self {
            features,
            target,
            feature_names,
            scaler: None,
        })
    }

    /// Builds a dataset whose features are named `x1 .. xd`.
    pub fn with_default_names(features: Array2<f64>, target: Array1<f64>) -> Result<Self> {
        let names = (1..=features.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(features, target, names)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn target(&self) -> ArrayView1<'_, f64> {
        self.target.view()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.features.column(j)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn scaler(&self) -> Option<&ScalingRecord> {
        self.scaler.as_ref()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::input(format!("unknown feature '{name}'")))
    }

    /// Indices of columns flagged constant by the scaler (empty when unscaled).
    pub fn constant_features(&self) -> Vec<usize> {
        self.scaler
            .as_ref()
            .map(ScalingRecord::constant_features)
            .unwrap_or_default()
    }

    /// Copy restricted to the given columns, in the given order.
    pub fn select_features(&self, columns: &[usize]) -> Result<Dataset> {
        if columns.is_empty() {
            return Err(Error::input("cannot select an empty feature set"));
        }
        if let Some(&j) = columns.iter().find(|&&j| j >= self.d()) {
            return Err(Error::input(format!("feature index {j} out of range")));
        }
        let features = self.features.select(Axis(1), columns);
        let names = columns
            .iter()
            .map(|&j| self.feature_names[j].clone())
            .collect();
        let mut out = Dataset::new(features, self.target.clone(), names)?;
        out.scaler = self.scaler.as_ref().map(|s| ScalingRecord {
            feature_ranges: columns.iter().map(|&j| s.feature_ranges[j]).collect(),
            target_range: s.target_range,
        });
        Ok(out)
    }

    /// Copy restricted to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::input("cannot select an empty row set"));
        }
        if let Some(&i) = rows.iter().find(|&&i| i >= self.n()) {
            return Err(Error::input(format!("row index {i} out of range")));
        }
        Ok(Dataset {
            features: self.features.select(Axis(0), rows),
            target: self.target.select(Axis(0), rows),
            feature_names: self.feature_names.clone(),
            scaler: self.scaler.clone(),
        })
    }

    /// Returns a copy with column `j` replaced. Values must be finite.
    pub fn with_column(&self, j: usize, values: Array1<f64>) -> Result<Dataset> {
        if j >= self.d() || values.len() != self.n() {
            return Err(Error::input("replacement column has the wrong shape"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("replacement column contains non-finite values"));
        }
        let mut out = self.clone();
        out.features.column_mut(j).assign(&values);
        Ok(out)
    }

    /// Maps every feature column (and optionally the target) affinely onto `[0, 1]`.
    ///
    /// The ranges are taken from the current values; a previously stored
    /// record is replaced. Constant columns become all zeros and are flagged
    /// in the returned record.
    pub fn min_max_scale(&self, scale_target: bool) -> Result<Dataset> {
        if self.n() < 2 {
            return Err(Error::input("scaling needs at least two rows"));
        }
        let ranges: Vec<(f64, f64)> = self.features.columns().into_iter().map(column_range).collect();
        let mut features = self.features.clone();
        for (mut col, &(lo, hi)) in features.columns_mut().into_iter().zip(&ranges) {
            col.mapv_inplace(|v| scale_value(v, lo, hi));
        }
        let (target, target_range) = if scale_target {
            let (lo, hi) = column_range(self.target.view());
            (self.target.mapv(|v| scale_value(v, lo, hi)), Some((lo, hi)))
        } else {
            (self.target.clone(), None)
        };
        let record = ScalingRecord {
            feature_ranges: ranges,
            target_range,
        };
        for w in record.warnings(&self.feature_names) {
            log::warn!("{w}");
        }
        Ok(Dataset {
            features,
            target,
            feature_names: self.feature_names.clone(),
            scaler: Some(record),
        })
    }

    /// Inverts a previous [`Dataset::min_max_scale`]; unscaled datasets are returned as is.
    pub fn unscale(&self) -> Dataset {
        let Some(record) = &self.scaler else {
            return self.clone();
        };
        let mut features = self.features.clone();
        for (mut col, &(lo, hi)) in features
            .columns_mut()
            .into_iter()
            .zip(&record.feature_ranges)
        {
            col.mapv_inplace(|v| unscale_value(v, lo, hi));
        }
        let target = self.target.mapv(|v| record.inverse_target(v));
        Dataset {
            features,
            target,
            feature_names: self.feature_names.clone(),
            scaler: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn one_column(values: &[f64]) -> Dataset {
        let n = values.len();
        Dataset::with_default_names(
            Array2::from_shape_vec((n, 1), values.to_vec()).unwrap(),
            Array1::linspace(0.0, 1.0, n),
        )
        .unwrap()
    }

    #[test]
    fn scales_column_affinely() {
        let ds = one_column(&[2.0, 4.0, 6.0]).min_max_scale(false).unwrap();
        assert_eq!(ds.column(0).to_vec(), vec![0.0, 0.5, 1.0]);
        assert!(ds.scaler().unwrap().constant_features().is_empty());
    }

    #[test]
    fn constant_column_maps_to_zero_with_warning() {
        let ds = one_column(&[5.0, 5.0, 5.0]).min_max_scale(false).unwrap();
        assert_eq!(ds.column(0).to_vec(), vec![0.0, 0.0, 0.0]);
        let rec = ds.scaler().unwrap();
        assert_eq!(rec.constant_features(), vec![0]);
        assert_eq!(rec.warnings(ds.feature_names()).len(), 1);
        assert_eq!(ds.unscale().column(0).to_vec(), vec![5.0, 5.0, 5.0]);
    }

    #[test]
    fn target_scaling_is_optional() {
        let ds = Dataset::with_default_names(array![[0.0], [1.0], [2.0]], array![10.0, 20.0, 30.0])
            .unwrap();
        assert_eq!(ds.min_max_scale(false).unwrap().target().to_vec(), vec![10.0, 20.0, 30.0]);
        let scaled = ds.min_max_scale(true).unwrap();
        assert_eq!(scaled.target().to_vec(), vec![0.0, 0.5, 1.0]);
        assert_eq!(scaled.scaler().unwrap().inverse_target(0.5), 20.0);
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        let bad = Dataset::with_default_names(array![[0.0], [f64::NAN]], array![1.0, 2.0]);
        assert!(matches!(bad, Err(Error::InvalidData(_))));
        let bad = Dataset::with_default_names(array![[0.0], [1.0]], array![1.0]);
        assert!(matches!(bad, Err(Error::InvalidData(_))));
        let dup = Dataset::new(
            array![[0.0, 1.0], [1.0, 0.0]],
            array![1.0, 2.0],
            vec!["a".into(), "a".into()],
        );
        assert!(matches!(dup, Err(Error::InvalidData(_))));
    }

    #[test]
    fn scaling_requires_two_rows() {
        let ds = Dataset::with_default_names(array![[3.0]], array![1.0]).unwrap();
        assert!(matches!(ds.min_max_scale(false), Err(Error::Input(_))));
    }

    #[test]
    fn select_features_keeps_scaler_in_sync() {
        let ds = Dataset::with_default_names(
            array![[0.0, 10.0, 5.0], [1.0, 20.0, 5.0], [2.0, 30.0, 5.0]],
            array![1.0, 2.0, 3.0],
        )
        .unwrap()
        .min_max_scale(false)
        .unwrap();
        let sub = ds.select_features(&[2, 1]).unwrap();
        assert_eq!(sub.feature_names(), &["x3".to_string(), "x2".to_string()]);
        assert_eq!(sub.constant_features(), vec![0]);
        assert_eq!(sub.scaler().unwrap().feature_ranges[1], (10.0, 30.0));
    }
}
