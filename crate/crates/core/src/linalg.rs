//! Small dense Cholesky used by the per-sample solvers.

use ndarray::{Array1, Array2};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub(crate) struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    /// Factors `a + ridge * I`, or returns `None` when a pivot is not
    /// safely positive.
    pub(crate) fn factor(a: &Array2<f64>, ridge: f64) -> Option<Self> {
        let n = a.nrows();
        debug_assert_eq!(n, a.ncols());
        let scale = (0..n).map(|i| a[[i, i]].abs()).fold(1.0_f64, f64::max);
        let floor = 1e-13 * scale;
        let mut lower = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut diag = a[[j, j]] + ridge;
            for p in 0..j {
                diag -= lower[[j, p]] * lower[[j, p]];
            }
            if diag.is_nan() || diag <= floor {
                return None;
            }
            let pivot = diag.sqrt();
            lower[[j, j]] = pivot;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for p in 0..j {
                    s -= lower[[i, p]] * lower[[j, p]];
                }
                lower[[i, j]] = s / pivot;
            }
        }
        Some(Self { lower })
    }

    pub(crate) fn solve(&self, rhs: &Array1<f64>) -> Array1<f64> {
        let n = self.lower.nrows();
        let mut y = rhs.clone();
        for i in 0..n {
            let mut s = y[i];
            for p in 0..i {
                s -= self.lower[[i, p]] * y[p];
            }
            y[i] = s / self.lower[[i, i]];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for p in (i + 1)..n {
                s -= self.lower[[p, i]] * y[p];
            }
            y[i] = s / self.lower[[i, i]];
        }
        y
    }
}

/// Principal submatrix of `a` on `idx`.
pub(crate) fn submatrix(a: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((idx.len(), idx.len()), |(r, c)| a[[idx[r], idx[c]]])
}
