//! Coding of unseen samples against a trained codebook.
//!
//! A held-out sample has no row in the training regularizer, so it is coded
//! with no diagonal term and no coupling: plain L1-regularized least squares
//! with the model's `alpha`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::data::Model;
use crate::error::{Error, Result};
use crate::sparse::{solve_code_with_gram, CodeProblem};

fn check_dim(model: &Model, found: usize) -> Result<()> {
    if found != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found,
        });
    }
    Ok(())
}

fn encode_with_gram(x: ArrayView1<'_, f64>, model: &Model, gram: &Array2<f64>, zeros: &Array1<f64>) -> Result<Array1<f64>> {
    let problem = CodeProblem::new(x, model.codebook.view(), 0.0, zeros.view(), model.hyperparams.alpha);
    Ok(solve_code_with_gram(&problem, gram)?.v)
}

pub fn encode(x: ArrayView1<'_, f64>, model: &Model) -> Result<Array1<f64>> {
    check_dim(model, x.len())?;
    let gram = model.codebook.t().dot(&model.codebook);
    encode_with_gram(x, model, &gram, &Array1::zeros(model.n_codewords()))
}

/// Encodes every column of a `D × M` matrix; returns `K × M` codes.
pub fn encode_batch(samples: ArrayView2<'_, f64>, model: &Model) -> Result<Array2<f64>> {
    check_dim(model, samples.nrows())?;
    let gram = model.codebook.t().dot(&model.codebook);
    let zeros = Array1::zeros(model.n_codewords());
    let mut codes = Array2::zeros((model.n_codewords(), samples.ncols()));
    for (i, x) in samples.columns().into_iter().enumerate() {
        codes.column_mut(i).assign(&encode_with_gram(x, model, &gram, &zeros)?);
    }
    Ok(codes)
}
