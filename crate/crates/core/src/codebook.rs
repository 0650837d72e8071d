//! Norm-constrained codebook update: `min_U ‖X − UV‖²` s.t. `‖u_k‖² ≤ c`.
//!
//! Solved by block coordinate descent over the columns of `U`. With
//! `G = VVᵀ` and `B = XVᵀ`, the exact minimizer for column `k` with the
//! others fixed is `(B_k − Σ_{j≠k} u_j G_jk) / G_kk`, projected onto the ball
//! of radius `√c`. Every column update is feasible and never increases the
//! objective.

use ndarray::{Array1, Array2, ArrayView2};

use crate::data::NORM_SLACK;
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 1000;
pub const COLUMN_CHANGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct CodebookProblem<'a> {
    /// `D × N` features.
    pub features: ArrayView2<'a, f64>,
    /// `K × N` codes.
    pub codes: ArrayView2<'a, f64>,
    pub c: f64,
    pub warm_start: Option<ArrayView2<'a, f64>>,
}

impl<'a> CodebookProblem<'a> {
    pub fn new(features: ArrayView2<'a, f64>, codes: ArrayView2<'a, f64>, c: f64) -> Self {
        Self {
            features,
            codes,
            c,
            warm_start: None,
        }
    }

    pub fn with_warm_start(mut self, u: ArrayView2<'a, f64>) -> Self {
        self.warm_start = Some(u);
        self
    }

    fn check(&self) -> Result<()> {
        let n = self.features.ncols();
        if self.codes.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.codes.ncols(),
            });
        }
        if let Some(u) = self.warm_start {
            if u.dim() != (self.features.nrows(), self.codes.nrows()) {
                return Err(Error::DimensionMismatch {
                    expected: self.codes.nrows(),
                    found: u.ncols(),
                });
            }
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidHyperparams("c must be > 0".into()));
        }
        let finite = self.features.iter().chain(self.codes.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("codebook problem"));
        }
        Ok(())
    }
}

/// `‖X − UV‖²`.
pub fn reconstruction_error(features: ArrayView2<'_, f64>, codebook: ArrayView2<'_, f64>, codes: ArrayView2<'_, f64>) -> f64 {
    let r = &features - &codebook.dot(&codes);
    r.iter().map(|v| v * v).sum()
}

fn project_to_ball(u: &mut Array1<f64>, c: f64) {
    let sq = u.dot(u);
    if sq > c {
        *u *= (c / sq).sqrt();
    }
}

pub fn update_codebook(problem: &CodebookProblem<'_>) -> Result<Array2<f64>> {
    problem.check()?;
    let d = problem.features.nrows();
    let k = problem.codes.nrows();
    if problem.features.iter().all(|&v| v == 0.0) {
        return Ok(Array2::zeros((d, k)));
    }

    let gram = problem.codes.dot(&problem.codes.t());
    let cross = problem.features.dot(&problem.codes.t());
    let mut u = match problem.warm_start {
        Some(w) => w.to_owned(),
        None => Array2::zeros((d, k)),
    };
    for mut col in u.columns_mut() {
        let mut owned = col.to_owned();
        project_to_ball(&mut owned, problem.c);
        col.assign(&owned);
    }

    // ug = U·G, kept current across column updates.
    let mut ug = u.dot(&gram);
    for _ in 0..MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..k {
            let gjj = gram[[j, j]];
            if gjj <= 0.0 {
                continue;
            }
            let old = u.column(j).to_owned();
            // B_j − Σ_{i≠j} u_i G_ij = B_j − (UG)_j + u_j G_jj
            let mut new = &cross.column(j) - &ug.column(j) + &old * gjj;
            new /= gjj;
            project_to_ball(&mut new, problem.c);
            let delta = &new - &old;
            let change = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if change > 0.0 {
                for r in 0..d {
                    let dr = delta[r];
                    if dr != 0.0 {
                        for col in 0..k {
                            ug[[r, col]] += dr * gram[[j, col]];
                        }
                    }
                }
                u.column_mut(j).assign(&new);
            }
            max_change = max_change.max(change);
        }
        if max_change < COLUMN_CHANGE_TOL {
            break;
        }
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("codebook update"));
    }
    Ok(u)
}

/// Stationarity certificate for the constrained codebook problem.
///
/// For each column take the gradient column `g_k` of `‖X − UV‖²`,
/// i.e. `2(UVVᵀ − XVᵀ)_k`. Interior columns contribute `‖g_k‖`; columns on
/// the boundary contribute the part of `g_k` orthogonal to `u_k` plus any
/// positive (outward) component along `u_k`. Returns the maximum over `k`.
pub fn kkt_residual(features: ArrayView2<'_, f64>, codes: ArrayView2<'_, f64>, codebook: ArrayView2<'_, f64>, c: f64) -> f64 {
    let grad = (codebook.dot(&codes.dot(&codes.t())) - features.dot(&codes.t())) * 2.0;
    let mut worst: f64 = 0.0;
    for (g, u) in grad.columns().into_iter().zip(codebook.columns()) {
        let sq = u.dot(&u);
        let r = if sq < c - NORM_SLACK {
            g.dot(&g).sqrt()
        } else {
            let unit = &u / sq.sqrt();
            let along = g.dot(&unit);
            let ortho = &g - &(&unit * along);
            ortho.dot(&ortho).sqrt() + along.max(0.0)
        };
        worst = worst.max(r);
    }
    worst
}
