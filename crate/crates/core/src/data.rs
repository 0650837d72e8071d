//! Typed containers for samples, hyperparameters and trained models.

use std::fmt;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Which domain a sample was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn tag(self) -> &'static str {
        match self {
            Domain::Source => "S",
            Domain::Target => "T",
        }
    }
}

/// Feature matrix (`D × N`, samples as columns) with per-sample domain and
/// optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub domains: Vec<Domain>,
    pub labels: Vec<Option<String>>,
}

impl Dataset {
    pub fn new(features: Array2<f64>, domains: Vec<Domain>, labels: Vec<Option<String>>) -> Self {
        Self {
            features,
            domains,
            labels,
        }
    }

    pub fn dim(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_source(&self) -> usize {
        self.domains.iter().filter(|d| **d == Domain::Source).count()
    }

    pub fn n_target(&self) -> usize {
        self.domains.iter().filter(|d| **d == Domain::Target).count()
    }

    pub fn n_labeled(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn sample(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.column(i)
    }
}

/// One broken dataset rule. `index` is `None` for dataset-wide rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub index: Option<usize>,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{} at index {}", self.rule, i),
            None => f.write_str(&self.rule),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(self))
        }
    }

    fn push(&mut self, index: Option<usize>, rule: impl Into<String>) {
        self.violations.push(Violation {
            index,
            rule: rule.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("ok");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every dataset invariant and reports all violations found.
pub fn validate_dataset(dataset: &Dataset) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = dataset.n_samples();

    if dataset.dim() < 1 {
        report.push(None, "feature dimension must be at least 1");
    }
    if n < 2 {
        report.push(None, "at least 2 samples required");
    }
    if dataset.domains.len() != n {
        report.push(
            None,
            format!("domain tag count {} does not match sample count {}", dataset.domains.len(), n),
        );
    }
    if dataset.labels.len() != n {
        report.push(
            None,
            format!("label count {} does not match sample count {}", dataset.labels.len(), n),
        );
    }
    if dataset.n_source() == 0 {
        report.push(None, "no source samples");
    }
    if dataset.n_target() == 0 {
        report.push(None, "no target samples");
    }
    for (i, (domain, label)) in dataset.domains.iter().zip(&dataset.labels).enumerate() {
        if *domain == Domain::Source && label.is_none() {
            report.push(Some(i), "unlabeled source sample");
        }
    }
    for (i, column) in dataset.features.columns().into_iter().enumerate() {
        if column.iter().any(|v| !v.is_finite()) {
            report.push(Some(i), "non-finite feature value");
        }
    }
    report
}

/// Scaling applied to the label Laplacian before it enters the objective.
///
/// `Unit` uses `L` exactly as built from the ±1 label matrix. `LabeledPairs`
/// divides it by the squared number of labeled samples, so `beta` weighs the
/// mean over labeled pairs instead of their sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LaplacianScale {
    Unit,
    #[default]
    LabeledPairs,
}

impl LaplacianScale {
    pub fn factor(self, n_labeled: usize) -> f64 {
        match self {
            LaplacianScale::Unit => 1.0,
            LaplacianScale::LabeledPairs if n_labeled == 0 => 1.0,
            LaplacianScale::LabeledPairs => 1.0 / (n_labeled as f64).powi(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    /// Number of codewords.
    pub k: usize,
    /// L1 weight.
    pub alpha: f64,
    /// Label Laplacian weight.
    pub beta: f64,
    /// Domain mean-discrepancy weight.
    pub gamma: f64,
    /// Bound on the squared norm of every codeword.
    pub c: f64,
    /// Maximum number of outer iterations.
    pub max_iters: usize,
    /// Relative objective change below which training stops.
    pub tol: f64,
    pub seed: u64,
    pub laplacian_scale: LaplacianScale,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            k: 128,
            alpha: 0.15,
            beta: 1.0,
            gamma: 1.0,
            c: 1.0,
            max_iters: 50,
            tol: 1e-6,
            seed: 0,
            laplacian_scale: LaplacianScale::default(),
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidHyperparams(msg.to_string()));
        if self.k < 1 {
            return fail("k must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail("alpha must be > 0");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return fail("beta must be >= 0");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return fail("gamma must be >= 0");
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return fail("c must be > 0");
        }
        if self.max_iters < 1 {
            return fail("iters must be at least 1");
        }
        // +inf is a legal tolerance: stop after the first iteration.
        if self.tol.is_nan() || self.tol < 0.0 {
            return fail("tol must be >= 0");
        }
        Ok(())
    }
}

/// Feasibility slack on the squared codeword norms.
pub const NORM_SLACK: f64 = 1e-8;

/// A trained codebook (`D × K`) with the hyperparameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub codebook: Array2<f64>,
    pub hyperparams: Hyperparams,
}

impl Model {
    pub fn new(codebook: Array2<f64>, hyperparams: Hyperparams) -> Result<Self> {
        hyperparams.validate()?;
        if codebook.ncols() != hyperparams.k {
            return Err(Error::DimensionMismatch {
                expected: hyperparams.k,
                found: codebook.ncols(),
            });
        }
        if codebook.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("codebook"));
        }
        for column in codebook.columns() {
            if column.dot(&column) > hyperparams.c + NORM_SLACK {
                return Err(Error::InvalidHyperparams(format!(
                    "codeword squared norm {} exceeds c = {}",
                    column.dot(&column),
                    hyperparams.c
                )));
            }
        }
        Ok(Self {
            codebook,
            hyperparams,
        })
    }

    pub fn dim(&self) -> usize {
        self.codebook.nrows()
    }

    pub fn n_codewords(&self) -> usize {
        self.codebook.ncols()
    }
}
