//! Label matrix, Laplacian, domain indicator and the combined code regularizer.
//!
//! With samples as columns of the code matrix `V`, the regularized objective
//! carries `Tr(V E Vᵀ)` where `E = β·L + γ·ππᵀ`:
//!
//! * `W[i][j]` is `+1` for two labeled samples of the same class, `-1` for
//!   different classes and `0` when either label is unknown (self-pairs of
//!   labeled samples are `+1`).
//! * `L = diag(d) − W` with `d_i = Σ_j W[i][j]`. Degrees may be negative, so
//!   `L` is in general indefinite.
//! * `π_i = 1/N_S` on source samples and `−1/N_T` on target samples, which
//!   makes `‖Vπ‖²` the squared distance between the two domain mean codes.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::data::{Dataset, Domain, Hyperparams};
use crate::error::{Error, Result};

pub fn build_label_matrix(labels: &[Option<String>]) -> Array2<f64> {
    let n = labels.len();
    Array2::from_shape_fn((n, n), |(i, j)| match (&labels[i], &labels[j]) {
        (Some(a), Some(b)) if a == b => 1.0,
        (Some(_), Some(_)) => -1.0,
        _ => 0.0,
    })
}

/// Returns the degree vector and `L = diag(d) − W`.
pub fn build_laplacian(w: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let degree = w.sum_axis(Axis(1));
    let mut laplacian = -w.clone();
    for (i, d) in degree.iter().enumerate() {
        laplacian[[i, i]] += d;
    }
    (degree, laplacian)
}

pub fn build_domain_indicator(domains: &[Domain]) -> Result<Array1<f64>> {
    let n_source = domains.iter().filter(|d| **d == Domain::Source).count();
    let n_target = domains.len() - n_source;
    if n_source == 0 || n_target == 0 {
        return Err(Error::MissingDomain);
    }
    let (ps, pt) = (1.0 / n_source as f64, -1.0 / n_target as f64);
    Ok(domains
        .iter()
        .map(|d| match d {
            Domain::Source => ps,
            Domain::Target => pt,
        })
        .collect())
}

/// `E = beta·L + gamma·ππᵀ`, dense.
pub fn build_e(laplacian: &Array2<f64>, pi: &Array1<f64>, beta: f64, gamma: f64) -> Array2<f64> {
    let n = pi.len();
    let mut e = laplacian * beta;
    for i in 0..n {
        for j in 0..n {
            e[[i, j]] += gamma * pi[i] * pi[j];
        }
    }
    e
}

/// `‖Vπ‖²`: squared distance between the source and target mean codes.
pub fn mmd_term(codes: ArrayView2<'_, f64>, pi: &Array1<f64>) -> f64 {
    let diff = codes.dot(pi);
    diff.dot(&diff)
}

/// `Tr(V M Vᵀ)` for a symmetric `N × N` matrix `M`.
pub fn trace_form(codes: ArrayView2<'_, f64>, m: &Array2<f64>) -> f64 {
    let vm = codes.dot(m);
    (&vm * &codes).sum()
}

/// Every regularizer matrix for one training set.
///
/// `laplacian_weight` is the coefficient actually multiplying `L` inside
/// `e`: `beta` times the configured [`crate::LaplacianScale`] factor.
#[derive(Debug, Clone)]
pub struct RegularizerBundle {
    pub label_matrix: Array2<f64>,
    pub degree: Array1<f64>,
    pub laplacian: Array2<f64>,
    pub pi: Array1<f64>,
    pub laplacian_weight: f64,
    pub gamma: f64,
    pub e: Array2<f64>,
}

impl RegularizerBundle {
    pub fn build(dataset: &Dataset, hyper: &Hyperparams) -> Result<Self> {
        let label_matrix = build_label_matrix(&dataset.labels);
        let (degree, laplacian) = build_laplacian(&label_matrix);
        let pi = build_domain_indicator(&dataset.domains)?;
        let laplacian_weight = hyper.beta * hyper.laplacian_scale.factor(dataset.n_labeled());
        let e = build_e(&laplacian, &pi, laplacian_weight, hyper.gamma);
        Ok(Self {
            label_matrix,
            degree,
            laplacian,
            pi,
            laplacian_weight,
            gamma: hyper.gamma,
            e,
        })
    }
}
