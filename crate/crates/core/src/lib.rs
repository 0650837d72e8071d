//! Cross-domain sparse coding.
//!
//! Learns one codebook shared by a labeled source domain and a partially
//! labeled target domain. The codes are regularized by a label-driven graph
//! Laplacian (same-class codes pulled together, different-class codes pushed
//! apart) and by the squared distance between the mean source code and the
//! mean target code. Training alternates per-sample L1-regularized quadratic
//! solves (feature-sign search) with a norm-constrained codebook update.
//!
//! Matrices follow the column convention: the feature matrix is `D × N` with
//! one sample per column, codes are `K × N`.

pub mod classifier;
pub mod cli;
pub mod codebook;
pub mod data;
pub mod encoder;
pub mod error;
pub mod io;
mod linalg;
pub mod regularizer;
pub mod sparse;
pub mod synth;
pub mod trainer;

pub use classifier::{accuracy, fit_centroids, predict, CentroidModel};
pub use codebook::{kkt_residual, update_codebook, CodebookProblem};
pub use data::{validate_dataset, Dataset, Domain, Hyperparams, LaplacianScale, Model, ValidationReport};
pub use encoder::{encode, encode_batch};
pub use error::{Error, Result};
pub use regularizer::RegularizerBundle;
pub use sparse::{solve_code, solve_code_bruteforce, CodeProblem, CodeSolution};
pub use synth::{generate, GroundTruth, SynthConfig, SynthOutput, TestSet};
pub use trainer::{fit, FitResult, ObjectiveTerms, StopReason, TrainHistory};
