//! Alternating minimization of the regularized sparse coding objective
//!
//! `‖X − UV‖² + β'·Tr(VLVᵀ) + γ·‖Vπ‖² + α·Σ_i ‖v_i‖₁`,  `‖u_k‖² ≤ c`
//!
//! where `β'` is `beta` after the configured Laplacian scaling. Each outer
//! iteration is a Gauss–Seidel pass over the samples (every code update sees
//! the freshest codes of all other samples) followed by one codebook update.

use log::{debug, info, warn};
use ndarray::{s, Array1, Array2, ArrayView2};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::codebook::{kkt_residual, reconstruction_error, update_codebook, CodebookProblem};
use crate::data::{validate_dataset, Dataset, Hyperparams, Model};
use crate::error::{Error, Result};
use crate::regularizer::{mmd_term, trace_form, RegularizerBundle};
use crate::sparse::{solve_code_with_gram, CodeProblem};

/// Single-domain sparse coding sweeps used to initialize training.
pub const INIT_SWEEPS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    pub reconstruction: f64,
    /// Weighted Laplacian term `β'·Tr(VLVᵀ)`.
    pub laplacian: f64,
    /// Weighted domain term `γ·‖Vπ‖²`.
    pub mmd: f64,
    /// Weighted sparsity term `α·Σ‖v_i‖₁`.
    pub l1: f64,
    pub total: f64,
}

impl ObjectiveTerms {
    fn new(reconstruction: f64, laplacian: f64, mmd: f64, l1: f64) -> Self {
        Self {
            reconstruction,
            laplacian,
            mmd,
            l1,
            total: reconstruction + laplacian + mmd + l1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 0 for the initial point.
    pub iteration: usize,
    pub terms: ObjectiveTerms,
    /// Total objective after the code sweep, before the codebook update.
    pub after_codes: Option<f64>,
    /// Some code update in this iteration needed the positive-definiteness ridge.
    pub safeguard: bool,
    /// Code updates that stopped at the step cap.
    pub capped_codes: usize,
    /// KKT residual of the codebook update that closed this iteration.
    pub codebook_kkt: Option<f64>,
    /// Largest squared column norm of the codebook after that update.
    pub codebook_max_norm_sq: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<IterationRecord>,
}

impl TrainHistory {
    pub fn totals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.terms.total).collect()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: Model,
    /// `K × N` codes of the training samples.
    pub codes: Array2<f64>,
    pub history: TrainHistory,
    pub stop_reason: StopReason,
    pub regularizer: RegularizerBundle,
}

/// Objective breakdown at `(U, V)`, reading the weights from `reg`.
pub fn objective(
    features: ArrayView2<'_, f64>,
    codebook: ArrayView2<'_, f64>,
    codes: ArrayView2<'_, f64>,
    reg: &RegularizerBundle,
    alpha: f64,
) -> ObjectiveTerms {
    let reconstruction = reconstruction_error(features, codebook, codes);
    let laplacian = if reg.laplacian_weight == 0.0 {
        0.0
    } else {
        reg.laplacian_weight * trace_form(codes, &reg.laplacian)
    };
    let mmd = if reg.gamma == 0.0 { 0.0 } else { reg.gamma * mmd_term(codes, &reg.pi) };
    let l1 = alpha * codes.iter().map(|v| v.abs()).sum::<f64>();
    ObjectiveTerms::new(reconstruction, laplacian, mmd, l1)
}

/// Coupling vector `f_i = 2 Σ_{j≠i} E_ij v_j`.
pub fn compute_f(i: usize, e: &Array2<f64>, codes: ArrayView2<'_, f64>) -> Array1<f64> {
    let mut f = codes.dot(&e.column(i));
    f.scaled_add(-e[[i, i]], &codes.column(i));
    f * 2.0
}

/// Picks `k` distinct training samples (seeded) as codewords, rescaled to
/// squared norm `c`. Extra codewords beyond `N`, and zero samples, are
/// replaced by random Gaussian directions.
pub fn sample_codebook(features: ArrayView2<'_, f64>, k: usize, c: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (d, n) = features.dim();
    let mut u = Array2::<f64>::zeros((d, k));
    let picks = index::sample(rng, n, k.min(n)).into_vec();
    for (col, &sample) in picks.iter().enumerate() {
        u.column_mut(col).assign(&features.column(sample));
    }
    for mut col in u.columns_mut() {
        let mut sq = col.dot(&col);
        if sq == 0.0 {
            for v in col.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            sq = col.dot(&col);
        }
        col *= (c / sq).sqrt();
    }
    u
}

fn code_all(
    features: ArrayView2<'_, f64>,
    codebook: &Array2<f64>,
    alpha: f64,
    codes: &mut Array2<f64>,
) -> Result<()> {
    let gram = codebook.t().dot(codebook);
    let f = Array1::<f64>::zeros(codebook.ncols());
    for (i, x) in features.columns().into_iter().enumerate() {
        let problem = CodeProblem::new(x, codebook.view(), 0.0, f.view(), alpha);
        let sol = solve_code_with_gram(&problem, &gram).map_err(|e| Error::Training {
            iteration: 0,
            sample: i,
            source: Box::new(e),
        })?;
        codes.column_mut(i).assign(&sol.v);
    }
    Ok(())
}

/// Initial `(U⁰, V⁰)` from plain sparse coding on all training samples:
/// sampled codewords, then [`INIT_SWEEPS`] rounds of coding every sample
/// (no coupling) and updating the codebook.
pub fn init_model(features: ArrayView2<'_, f64>, hyper: &Hyperparams) -> Result<(Array2<f64>, Array2<f64>)> {
    let n = features.ncols();
    if hyper.k > n {
        warn!("k = {} exceeds the number of samples ({n}); extra codewords start random", hyper.k);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut u = sample_codebook(features, hyper.k, hyper.c, &mut rng);
    let mut v = Array2::<f64>::zeros((hyper.k, n));
    for _ in 0..INIT_SWEEPS {
        code_all(features, &u, hyper.alpha, &mut v)?;
        u = update_codebook(&CodebookProblem::new(features, v.view(), hyper.c).with_warm_start(u.view()))?;
    }
    Ok((u, v))
}

/// Trains from the standard initialization.
pub fn fit(dataset: &Dataset, hyper: &Hyperparams) -> Result<FitResult> {
    validate_dataset(dataset).into_result()?;
    hyper.validate()?;
    let (u, v) = init_model(dataset.features.view(), hyper)?;
    fit_from(dataset, hyper, u, v)
}

/// Trains from a caller-supplied initial codebook and codes.
pub fn fit_from(dataset: &Dataset, hyper: &Hyperparams, mut u: Array2<f64>, mut v: Array2<f64>) -> Result<FitResult> {
    validate_dataset(dataset).into_result()?;
    hyper.validate()?;
    let x = dataset.features.view();
    let (d, n) = x.dim();
    if u.dim() != (d, hyper.k) {
        return Err(Error::DimensionMismatch {
            expected: hyper.k,
            found: u.ncols(),
        });
    }
    if v.dim() != (hyper.k, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.ncols(),
        });
    }

    let reg = RegularizerBundle::build(dataset, hyper)?;
    let mut history = TrainHistory::default();
    history.records.push(IterationRecord {
        iteration: 0,
        terms: objective(x, u.view(), v.view(), &reg, hyper.alpha),
        after_codes: None,
        safeguard: false,
        capped_codes: 0,
        codebook_kkt: None,
        codebook_max_norm_sq: None,
    });

    let mut stop_reason = StopReason::MaxIters;
    for t in 1..=hyper.max_iters {
        let gram = u.t().dot(&u);
        let mut safeguard = false;
        let mut capped_codes = 0;
        for i in 0..n {
            let f = compute_f(i, &reg.e, v.view());
            let problem = CodeProblem::new(x.column(i), u.view(), reg.e[[i, i]], f.view(), hyper.alpha);
            let sol = solve_code_with_gram(&problem, &gram).map_err(|e| Error::Training {
                iteration: t,
                sample: i,
                source: Box::new(e),
            })?;
            safeguard |= sol.ridge > 0.0 || sol.capped;
            capped_codes += usize::from(sol.capped);
            v.column_mut(i).assign(&sol.v);
        }
        let after_codes = objective(x, u.view(), v.view(), &reg, hyper.alpha).total;

        u = update_codebook(&CodebookProblem::new(x, v.view(), hyper.c).with_warm_start(u.view()))?;
        let kkt = kkt_residual(x, v.view(), u.view(), hyper.c);
        let max_norm_sq = u.columns().into_iter().map(|col| col.dot(&col)).fold(0.0f64, f64::max);
        let terms = objective(x, u.view(), v.view(), &reg, hyper.alpha);
        let previous = history.records[history.records.len() - 1].terms.total;
        history.records.push(IterationRecord {
            iteration: t,
            terms,
            after_codes: Some(after_codes),
            safeguard,
            capped_codes,
            codebook_kkt: Some(kkt),
            codebook_max_norm_sq: Some(max_norm_sq),
        });

        info!("iteration {t}: objective {:.6e}, codebook KKT {kkt:.2e}", terms.total);
        if safeguard {
            debug!("iteration {t}: ridge safeguard or step cap used ({capped_codes} capped codes)");
        }
        let change = (terms.total - previous).abs() / previous.max(1.0);
        if change < hyper.tol {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("training"));
    }
    let model = Model::new(u, hyper.clone())?;
    Ok(FitResult {
        model,
        codes: v,
        history,
        stop_reason,
        regularizer: reg,
    })
}

/// Codes of the samples belonging to `mask`, as a new `K × M` matrix.
pub fn select_columns(codes: ArrayView2<'_, f64>, mask: &[bool]) -> Array2<f64> {
    let keep: Vec<usize> = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
    let mut out = Array2::zeros((codes.nrows(), keep.len()));
    for (dst, &src) in keep.iter().enumerate() {
        out.slice_mut(s![.., dst]).assign(&codes.column(src));
    }
    out
}
