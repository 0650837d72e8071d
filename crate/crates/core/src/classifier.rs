//! Nearest-centroid classification over codes.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// One mean code per class; classes are kept in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    pub classes: Vec<String>,
    /// `K × C`, column `c` is the centroid of `classes[c]`.
    pub centroids: Array2<f64>,
}

/// Averages the labeled code columns per class. Unlabeled columns are ignored.
pub fn fit_centroids(codes: ArrayView2<'_, f64>, labels: &[Option<String>]) -> Result<CentroidModel> {
    if labels.len() != codes.ncols() {
        return Err(Error::DimensionMismatch {
            expected: codes.ncols(),
            found: labels.len(),
        });
    }
    let k = codes.nrows();
    let mut sums: BTreeMap<&str, (Array1<f64>, usize)> = BTreeMap::new();
    for (col, label) in codes.columns().into_iter().zip(labels) {
        if let Some(label) = label {
            let entry = sums.entry(label.as_str()).or_insert_with(|| (Array1::zeros(k), 0));
            entry.0 += &col;
            entry.1 += 1;
        }
    }
    if sums.is_empty() {
        return Err(Error::NoLabeledSamples);
    }
    let mut centroids = Array2::zeros((k, sums.len()));
    let mut classes = Vec::with_capacity(sums.len());
    for (c, (label, (sum, count))) in sums.into_iter().enumerate() {
        centroids.column_mut(c).assign(&(sum / count as f64));
        classes.push(label.to_string());
    }
    Ok(CentroidModel { classes, centroids })
}

/// Class of the nearest centroid; exact ties go to the smallest class id.
pub fn predict<'m>(model: &'m CentroidModel, code: ArrayView1<'_, f64>) -> &'m str {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (c, centroid) in model.centroids.columns().into_iter().enumerate() {
        let dist: f64 = centroid.iter().zip(code).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist < best_dist {
            best_dist = dist;
            best = c;
        }
    }
    &model.classes[best]
}

pub fn accuracy<P: AsRef<str>, T: AsRef<str>>(predictions: &[P], truths: &[T]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            found: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let hits = predictions.iter().zip(truths).filter(|(p, t)| p.as_ref() == t.as_ref()).count();
    Ok(hits as f64 / predictions.len() as f64)
}
