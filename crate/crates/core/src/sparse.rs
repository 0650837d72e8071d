//! Per-sample L1-regularized quadratic solver.
//!
//! Minimizes `‖x − U v‖² + e·vᵀv + vᵀf + α‖v‖₁` over `v ∈ R^K`. Writing
//! `A = UᵀU + e·I` and `b = Uᵀx − f/2`, the smooth part is
//! `s(v) = vᵀAv − 2bᵀv + xᵀx` with gradient `g = 2Av − 2b`.
//!
//! The main path is feature-sign search: keep an active set with a sign
//! vector `θ`, solve the sign-fixed quadratic on the active set in closed
//! form, and walk toward that solution with a discrete line search over
//! every point where an active coefficient crosses zero. The brute-force
//! solver enumerates all `3^K` sign patterns and is only meant as a test
//! oracle for small `K`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{submatrix, Cholesky};

/// Largest `K` accepted by [`solve_code_bruteforce`].
pub const BRUTEFORCE_MAX_K: usize = 8;

/// Feature-sign step cap. Hitting it returns the best iterate with `capped`.
pub const MAX_STEPS: usize = 1000;

const RIDGE_START: f64 = 1e-10;
const RIDGE_MAX: f64 = 1e-2;
// Zero coordinates are activated only when |g_k| exceeds alpha by this much.
const ACTIVATION_MARGIN: f64 = 1e-10;
const OPTIMALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct CodeProblem<'a> {
    pub x: ArrayView1<'a, f64>,
    pub codebook: ArrayView2<'a, f64>,
    /// Coefficient on `vᵀv` (a diagonal entry of the combined regularizer).
    pub e: f64,
    /// Linear coupling to the other samples' codes.
    pub f: ArrayView1<'a, f64>,
    pub alpha: f64,
}

impl<'a> CodeProblem<'a> {
    pub fn new(
        x: ArrayView1<'a, f64>,
        codebook: ArrayView2<'a, f64>,
        e: f64,
        f: ArrayView1<'a, f64>,
        alpha: f64,
    ) -> Self {
        Self {
            x,
            codebook,
            e,
            f,
            alpha,
        }
    }

    pub fn n_codewords(&self) -> usize {
        self.codebook.ncols()
    }

    fn check(&self) -> Result<()> {
        let (d, k) = self.codebook.dim();
        if self.x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.x.len(),
            });
        }
        if self.f.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: self.f.len(),
            });
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidHyperparams("alpha must be > 0".into()));
        }
        let finite = self.x.iter().chain(self.codebook.iter()).chain(self.f.iter()).all(|v| v.is_finite());
        if !finite || !self.e.is_finite() {
            return Err(Error::NonFinite("code problem"));
        }
        Ok(())
    }

    /// Builds the normalized quadratic, reusing a precomputed `UᵀU` if given.
    fn quadratic(&self, gram: Option<&Array2<f64>>) -> Quadratic {
        let mut a = match gram {
            Some(g) => g.clone(),
            None => self.codebook.t().dot(&self.codebook),
        };
        for i in 0..a.nrows() {
            a[[i, i]] += self.e;
        }
        let b = self.codebook.t().dot(&self.x) - &self.f * 0.5;
        Quadratic {
            a,
            b,
            xx: self.x.dot(&self.x),
            alpha: self.alpha,
        }
    }

    /// Full per-sample objective at `v`.
    pub fn objective(&self, v: &Array1<f64>) -> f64 {
        let r = &self.x - &self.codebook.dot(v);
        r.dot(&r) + self.e * v.dot(v) + v.dot(&self.f) + self.alpha * l1(v)
    }

    /// Gradient of the smooth part, `2(UᵀU + eI)v − (2Uᵀx − f)`.
    pub fn gradient(&self, v: &Array1<f64>) -> Array1<f64> {
        let uv = self.codebook.dot(v);
        (self.codebook.t().dot(&uv) + v * self.e) * 2.0 - (self.codebook.t().dot(&self.x) * 2.0 - self.f)
    }

    /// Largest violation of the subgradient optimality conditions at `v`:
    /// `|g_k + α·sign(v_k)|` on the support, `max(0, |g_k| − α)` off it.
    pub fn optimality_residual(&self, v: &Array1<f64>) -> f64 {
        let g = self.gradient(v);
        g.iter()
            .zip(v)
            .map(|(&gk, &vk)| {
                if vk != 0.0 {
                    (gk + self.alpha * vk.signum()).abs()
                } else {
                    (gk.abs() - self.alpha).max(0.0)
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodeSolution {
    pub v: Array1<f64>,
    pub objective: f64,
    /// Feature-sign steps taken (patterns examined for the oracle).
    pub iterations: usize,
    /// Largest ridge the positive-definiteness safeguard had to add; 0 if none.
    pub ridge: f64,
    /// The step cap was reached or the safeguard stalled before optimality.
    pub capped: bool,
}

fn l1(v: &Array1<f64>) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

struct Quadratic {
    a: Array2<f64>,
    b: Array1<f64>,
    xx: f64,
    alpha: f64,
}

impl Quadratic {
    fn objective(&self, v: &Array1<f64>) -> f64 {
        v.dot(&self.a.dot(v)) - 2.0 * self.b.dot(v) + self.xx + self.alpha * l1(v)
    }

    fn gradient(&self, v: &Array1<f64>) -> Array1<f64> {
        (self.a.dot(v) - &self.b) * 2.0
    }

    /// Minimizer of the sign-fixed quadratic on `active`, as a proximal step
    /// around `current` when a ridge is needed for the factorization.
    fn active_target(&self, active: &[usize], theta: &[f64], current: &Array1<f64>) -> Result<(Array1<f64>, f64)> {
        let a_sub = submatrix(&self.a, active);
        let rhs: Array1<f64> = active.iter().map(|&j| self.b[j] - 0.5 * self.alpha * theta[j]).collect();
        let mut ridge = 0.0;
        loop {
            if let Some(chol) = Cholesky::factor(&a_sub, ridge) {
                let mut rhs = rhs;
                if ridge > 0.0 {
                    for (r, &j) in rhs.iter_mut().zip(active) {
                        *r += ridge * current[j];
                    }
                }
                let sol = chol.solve(&rhs);
                if sol.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("feature-sign step"));
                }
                return Ok((sol, ridge));
            }
            ridge = if ridge == 0.0 { RIDGE_START } else { ridge * 10.0 };
            if ridge > RIDGE_MAX * (1.0 + 1e-9) {
                return Err(Error::NonConvexSubproblem { ridge: RIDGE_MAX });
            }
        }
    }
}

/// Solves the per-sample problem by feature-sign search.
pub fn solve_code(problem: &CodeProblem<'_>) -> Result<CodeSolution> {
    problem.check()?;
    let q = problem.quadratic(None);
    feature_sign(&q, None)
}

/// Like [`solve_code`] but with `UᵀU` supplied by the caller.
pub fn solve_code_with_gram(problem: &CodeProblem<'_>, gram: &Array2<f64>) -> Result<CodeSolution> {
    problem.check()?;
    let k = problem.n_codewords();
    if gram.dim() != (k, k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: gram.nrows(),
        });
    }
    let q = problem.quadratic(Some(gram));
    feature_sign(&q, None)
}

/// Like [`solve_code`], also returning the objective after every step
/// (starting with the objective at `v = 0`).
pub fn solve_code_traced(problem: &CodeProblem<'_>) -> Result<(CodeSolution, Vec<f64>)> {
    problem.check()?;
    let q = problem.quadratic(None);
    let mut trace = Vec::new();
    let sol = feature_sign(&q, Some(&mut trace))?;
    Ok((sol, trace))
}

fn feature_sign(q: &Quadratic, mut trace: Option<&mut Vec<f64>>) -> Result<CodeSolution> {
    let k = q.b.len();
    let alpha = q.alpha;
    let mut v = Array1::<f64>::zeros(k);
    let mut theta = vec![0.0; k];
    let mut active: Vec<usize> = Vec::new();
    let mut obj = q.objective(&v);
    let mut steps = 0;
    let mut max_ridge: f64 = 0.0;
    let mut capped = false;
    if let Some(t) = trace.as_deref_mut() {
        t.push(obj);
    }

    let support_optimal = |g: &Array1<f64>, active: &[usize], theta: &[f64]| {
        active.iter().all(|&j| (g[j] + alpha * theta[j]).abs() <= OPTIMALITY_TOL)
    };

    'outer: loop {
        let g = q.gradient(&v);
        let mut pick = None;
        let mut best = alpha + ACTIVATION_MARGIN;
        for j in 0..k {
            if theta[j] == 0.0 && g[j].abs() > best {
                best = g[j].abs();
                pick = Some(j);
            }
        }
        match pick {
            Some(j) => {
                theta[j] = -g[j].signum();
                active.push(j);
            }
            None if support_optimal(&g, &active, &theta) => break,
            None => {}
        }

        loop {
            if steps >= MAX_STEPS {
                capped = true;
                break 'outer;
            }
            steps += 1;
            let (target, ridge) = q.active_target(&active, &theta, &v)?;
            max_ridge = max_ridge.max(ridge);

            let (next, next_obj, reached) = line_search(q, &v, &active, &target);
            if next_obj > obj {
                // Only possible when the ridge safeguard distorted the step.
                capped = true;
                break 'outer;
            }
            v = next;
            obj = next_obj;
            if let Some(t) = trace.as_deref_mut() {
                t.push(obj);
            }
            active.retain(|&j| v[j] != 0.0);
            for j in 0..k {
                theta[j] = if v[j] == 0.0 { 0.0 } else { v[j].signum() };
            }

            // A full unridged step lands on the closed-form optimum of the
            // sign-fixed problem, so the support conditions hold exactly.
            if reached && ridge == 0.0 {
                break;
            }
            let g = q.gradient(&v);
            if support_optimal(&g, &active, &theta) {
                break;
            }
        }
    }

    Ok(CodeSolution {
        v,
        objective: obj,
        iterations: steps,
        ridge: max_ridge,
        capped,
    })
}

/// Discrete line search from `v` to `target` (given on `active`). Returns the
/// best point, its objective and whether it is the full step with no sign
/// change.
fn line_search(q: &Quadratic, v: &Array1<f64>, active: &[usize], target: &Array1<f64>) -> (Array1<f64>, f64, bool) {
    let point_at = |t: f64, zero: Option<usize>| {
        let mut p = v.clone();
        for (pos, &j) in active.iter().enumerate() {
            p[j] = v[j] + t * (target[pos] - v[j]);
        }
        if let Some(j) = zero {
            p[j] = 0.0;
        }
        p
    };

    let full = point_at(1.0, None);
    let full_consistent = active
        .iter()
        .all(|&j| v[j] == 0.0 || full[j].signum() == v[j].signum() && full[j] != 0.0);
    let mut best_obj = q.objective(&full);
    let mut best = full;
    let mut reached = full_consistent;

    let mut crossings: Vec<(f64, usize)> = active
        .iter()
        .enumerate()
        .filter_map(|(pos, &j)| {
            let (cur, tgt) = (v[j], target[pos]);
            if cur != 0.0 && (tgt == 0.0 || tgt.signum() != cur.signum()) {
                Some((cur / (cur - tgt), j))
            } else {
                None
            }
        })
        .collect();
    crossings.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (t, j) in crossings {
        let p = point_at(t, Some(j));
        let o = q.objective(&p);
        if o < best_obj {
            best_obj = o;
            best = p;
            reached = false;
        }
    }
    (best, best_obj, reached)
}

/// Exhaustive sign-pattern enumeration, for `K <= 8`.
pub fn solve_code_bruteforce(problem: &CodeProblem<'_>) -> Result<CodeSolution> {
    problem.check()?;
    let k = problem.n_codewords();
    if k > BRUTEFORCE_MAX_K {
        return Err(Error::TooLarge {
            k,
            max: BRUTEFORCE_MAX_K,
        });
    }
    let q = problem.quadratic(None);
    let mut best_v = Array1::<f64>::zeros(k);
    let mut best_obj = q.objective(&best_v);
    let n_patterns = 3usize.pow(k as u32);

    let mut theta = vec![0.0; k];
    for code in 1..n_patterns {
        let mut rest = code;
        for t in theta.iter_mut() {
            *t = [0.0, 1.0, -1.0][rest % 3];
            rest /= 3;
        }
        let active: Vec<usize> = (0..k).filter(|&j| theta[j] != 0.0).collect();
        let a_sub = submatrix(&q.a, &active);
        let Some(chol) = Cholesky::factor(&a_sub, 0.0) else {
            continue;
        };
        let rhs: Array1<f64> = active.iter().map(|&j| q.b[j] - 0.5 * q.alpha * theta[j]).collect();
        let sol = chol.solve(&rhs);
        if sol.iter().zip(&active).any(|(&s, &j)| s == 0.0 || s.signum() != theta[j]) {
            continue;
        }
        let mut v = Array1::<f64>::zeros(k);
        for (&s, &j) in sol.iter().zip(&active) {
            v[j] = s;
        }
        let obj = q.objective(&v);
        if obj < best_obj {
            best_obj = obj;
            best_v = v;
        }
    }

    Ok(CodeSolution {
        v: best_v,
        objective: best_obj,
        iterations: n_patterns,
        ridge: 0.0,
        capped: false,
    })
}
