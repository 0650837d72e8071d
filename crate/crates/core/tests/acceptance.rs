//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use crodomsc::regularizer::mmd_term;
use crodomsc::sparse::solve_code;
use crodomsc::trainer::{fit_from, init_model};
use crodomsc::{
    encode_batch, fit, fit_centroids, generate, predict, solve_code_bruteforce, CodeProblem, Dataset, Hyperparams,
    SynthConfig,
};
use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn hyper(beta: f64, gamma: f64, seed: u64) -> Hyperparams {
    Hyperparams {
        k: 15,
        beta,
        gamma,
        max_iters: 30,
        tol: 0.0,
        seed,
        ..Hyperparams::default()
    }
}

fn synth(seed: u64) -> crodomsc::SynthOutput {
    generate(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })
    .expect("default synthetic config is valid")
}

fn uniform(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| rng.random_range(-scale..scale))
}

fn inf_norm(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

// ---------------------------------------------------------------------------
// 1. Oracle equivalence

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_excess, mut worst_gap) = (f64::NEG_INFINITY, 0.0f64);
    let mut failures = 0;
    let mut count = 0;
    for &e in &[0.0, 0.1, 1.0] {
        for _ in 0..80 {
            let k = rng.random_range(1..=5);
            // Without the ridge the quadratic is only positive definite for K <= D.
            let d = if e == 0.0 { rng.random_range(k..=6) } else { rng.random_range(1..=6) };
            let u = uniform(&mut rng, d, k, 1.0);
            let x: Array1<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let f: Array1<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            let alpha = rng.random_range(0.01..1.5);
            let p = CodeProblem::new(x.view(), u.view(), e, f.view(), alpha);
            let (Ok(sol), Ok(oracle)) = (solve_code(&p), solve_code_bruteforce(&p)) else {
                failures += 1;
                continue;
            };
            count += 1;
            let excess = sol.objective - oracle.objective;
            let gap = inf_norm(&sol.v, &oracle.v);
            worst_excess = worst_excess.max(excess);
            worst_gap = worst_gap.max(gap);
            if excess > 1e-6 || gap > 1e-5 {
                failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures == 0 && count >= 200 && secs < 30.0,
        format!("{count} problems, {failures} failures, max objective excess {worst_excess:.2e}, max gap {worst_gap:.2e}, {secs:.2}s"),
    )
}

// ---------------------------------------------------------------------------
// 2. Soft-threshold closed form

fn orthonormal_columns(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Array2<f64> {
    loop {
        let mut q = uniform(rng, d, k, 1.0);
        let mut ok = true;
        for j in 0..k {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).to_owned();
                q.column_mut(j).scaled_add(-proj, &qi);
            }
            let norm = q.column(j).dot(&q.column(j)).sqrt();
            if norm < 1e-3 {
                ok = false;
                break;
            }
            q.column_mut(j).mapv_inplace(|v| v / norm);
        }
        if ok {
            return q;
        }
    }
}

fn soft_threshold_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(1..=8);
        let k = rng.random_range(1..=d);
        let u = orthonormal_columns(&mut rng, d, k);
        let x: Array1<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let alpha = rng.random_range(0.001..4.0);
        let f = Array1::zeros(k);
        let sol = solve_code(&CodeProblem::new(x.view(), u.view(), 0.0, f.view(), alpha)).expect("well-posed");
        let expected: Array1<f64> = u.t().dot(&x).mapv(|z| z.signum() * (z.abs() - alpha / 2.0).max(0.0));
        worst = worst.max(inf_norm(&sol.v, &expected));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1e-8 && secs < 5.0, format!("100 cases, max deviation {worst:.2e}, {secs:.2}s"))
}

// ---------------------------------------------------------------------------
// 3 & 8. Monotonicity, codebook feasibility and optimality

fn monotone_and_feasible() -> (Outcome, Outcome) {
    let start = Instant::now();
    let (mut mono_fail, mut worst_rise) = (0, f64::NEG_INFINITY);
    let (mut feas_fail, mut worst_norm, mut worst_kkt) = (0, 0.0f64, 0.0f64);
    let mut updates = 0;
    for seed in 0..SEEDS {
        let data = synth(seed);
        let hp = hyper(1.0, 1.0, seed);
        let result = match fit(&data.train, &hp) {
            Ok(r) => r,
            Err(e) => {
                mono_fail += 1;
                feas_fail += 1;
                eprintln!("seed {seed}: {e}");
                continue;
            }
        };
        for w in result.history.records.windows(2) {
            let rise = w[1].terms.total - w[0].terms.total;
            worst_rise = worst_rise.max(rise);
            if rise > 1e-6 && !w[1].safeguard {
                mono_fail += 1;
            }
        }
        for rec in &result.history.records[1..] {
            updates += 1;
            let norm = rec.codebook_max_norm_sq.unwrap_or(f64::INFINITY);
            let kkt = rec.codebook_kkt.unwrap_or(f64::INFINITY);
            worst_norm = worst_norm.max(norm);
            worst_kkt = worst_kkt.max(kkt);
            if norm > hp.c + 1e-8 || kkt > 1e-5 {
                feas_fail += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        outcome(
            mono_fail == 0 && secs < 60.0,
            format!("{SEEDS} seeds, {mono_fail} violations, largest rise {worst_rise:.2e}, {secs:.2}s"),
        ),
        outcome(
            feas_fail == 0 && updates == SEEDS as usize * 30,
            format!("{updates} updates, max ‖u_k‖² {worst_norm:.10}, max KKT residual {worst_kkt:.2e}"),
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. Degeneration to plain sparse coding, against an independent reference

/// Lasso `min ‖x − Uv‖² + α‖v‖₁` by cyclic coordinate descent.
fn reference_lasso(x: &[f64], u: &Array2<f64>, alpha: f64) -> Vec<f64> {
    let (d, k) = u.dim();
    let mut v = vec![0.0; k];
    let mut r = x.to_vec();
    let sq: Vec<f64> = (0..k).map(|j| (0..d).map(|i| u[[i, j]] * u[[i, j]]).sum()).collect();
    for _ in 0..200_000 {
        let mut change = 0.0f64;
        for j in 0..k {
            if sq[j] == 0.0 {
                continue;
            }
            let z: f64 = (0..d).map(|i| u[[i, j]] * (r[i] + u[[i, j]] * v[j])).sum();
            let new = z.signum() * (z.abs() - alpha / 2.0).max(0.0) / sq[j];
            let delta = new - v[j];
            if delta != 0.0 {
                for i in 0..d {
                    r[i] -= u[[i, j]] * delta;
                }
                v[j] = new;
                change = change.max(delta.abs());
            }
        }
        if change < 1e-15 {
            break;
        }
    }
    v
}

/// `min ‖X − UV‖²` s.t. `‖u_k‖² ≤ c` by accelerated projected gradient.
fn reference_codebook(x: &Array2<f64>, v: &Array2<f64>, u0: &Array2<f64>, c: f64) -> Array2<f64> {
    let g = v.dot(&v.t());
    let b = x.dot(&v.t());
    // Largest eigenvalue of G by power iteration.
    let mut w = Array1::from_elem(g.nrows(), 1.0);
    let mut lambda = 0.0;
    for _ in 0..500 {
        let gw = g.dot(&w);
        let n = gw.dot(&gw).sqrt();
        if n == 0.0 {
            return u0.clone();
        }
        lambda = n / w.dot(&w).sqrt();
        w = gw / n;
    }
    let step = 1.0 / (2.0 * lambda * 1.01);
    let project = |mut m: Array2<f64>| {
        for mut col in m.columns_mut() {
            let sq = col.dot(&col);
            if sq > c {
                col *= (c / sq).sqrt();
            }
        }
        m
    };
    let mut u = project(u0.clone());
    let mut y = u.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let grad = (y.dot(&g) - &b) * 2.0;
        let next = project(&y - &(grad * step));
        let change = (&next - &u).iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        // Restart momentum when it points uphill.
        let uphill = (&y - &next).iter().zip((&next - &u).iter()).map(|(a, b)| a * b).sum::<f64>() > 0.0;
        y = if uphill {
            t = 1.0;
            next.clone()
        } else {
            let y_next = &next + &((&next - &u) * ((t - 1.0) / t_next));
            t = t_next;
            y_next
        };
        u = next;
        if change < 1e-14 {
            break;
        }
    }
    u
}

fn plain_objective(x: &Array2<f64>, u: &Array2<f64>, v: &Array2<f64>, alpha: f64) -> f64 {
    let r = x - &u.dot(v);
    r.iter().map(|e| e * e).sum::<f64>() + alpha * v.iter().map(|e| e.abs()).sum::<f64>()
}

fn plain_degeneration() -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for seed in 0..3 {
        let data = synth(seed);
        let hp = hyper(0.0, 0.0, seed);
        let x = data.train.features.clone();
        let (u0, v0) = init_model(x.view(), &hp).expect("init");
        let result = fit_from(&data.train, &hp, u0.clone(), v0.clone()).expect("fit");
        let ours = result.history.totals();

        let (mut u, mut v) = (u0, v0);
        let mut reference = vec![plain_objective(&x, &u, &v, hp.alpha)];
        for _ in 0..hp.max_iters {
            for i in 0..x.ncols() {
                let xi: Vec<f64> = x.column(i).to_vec();
                let code = reference_lasso(&xi, &u, hp.alpha);
                v.column_mut(i).assign(&Array1::from(code));
            }
            u = reference_codebook(&x, &v, &u, hp.c);
            reference.push(plain_objective(&x, &u, &v, hp.alpha));
        }
        if ours.len() != reference.len() {
            failures += 1;
            continue;
        }
        for (a, b) in ours.iter().zip(&reference) {
            let diff = (a - b).abs();
            worst = worst.max(diff);
            if diff > 1e-6 {
                failures += 1;
            }
        }
    }
    outcome(failures == 0, format!("3 seeds × 31 points, {failures} deviations, max |ΔJ| {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// 5. MMD ablation

fn mmd_ablation() -> Outcome {
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..SEEDS {
        let data = synth(seed);
        let with = hyper(1.0, 1.0, seed);
        let without = hyper(1.0, 0.0, seed);
        let (u0, v0) = init_model(data.train.features.view(), &with).expect("init");
        let a = fit_from(&data.train, &with, u0.clone(), v0.clone()).expect("fit");
        let b = fit_from(&data.train, &without, u0, v0).expect("fit");
        let (ma, mb) = (mmd_term(a.codes.view(), &a.regularizer.pi), mmd_term(b.codes.view(), &b.regularizer.pi));
        wins += usize::from(ma < mb);
        pairs.push(format!("{ma:.3}/{mb:.3}"));
    }
    outcome(wins >= 9, format!("γ=1 smaller on {wins}/{SEEDS} seeds (γ=1/γ=0: {})", pairs.join(" ")))
}

// ---------------------------------------------------------------------------
// 6. Label ablation

fn class_distance_ratio(codes: ArrayView2<'_, f64>, data: &Dataset) -> f64 {
    let labeled: Vec<usize> = (0..data.n_samples()).filter(|&i| data.labels[i].is_some()).collect();
    let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0usize, 0.0, 0usize);
    for (a, &i) in labeled.iter().enumerate() {
        for &j in &labeled[a + 1..] {
            let diff = &codes.column(i) - &codes.column(j);
            let dist = diff.dot(&diff).sqrt();
            if data.labels[i] == data.labels[j] {
                intra += dist;
                n_intra += 1;
            } else {
                inter += dist;
                n_inter += 1;
            }
        }
    }
    (intra / n_intra as f64) / (inter / n_inter as f64)
}

fn label_ablation() -> Outcome {
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..SEEDS {
        let data = synth(seed);
        let with = hyper(1.0, 1.0, seed);
        let without = hyper(0.0, 1.0, seed);
        let (u0, v0) = init_model(data.train.features.view(), &with).expect("init");
        let a = fit_from(&data.train, &with, u0.clone(), v0.clone()).expect("fit");
        let b = fit_from(&data.train, &without, u0, v0).expect("fit");
        let (ra, rb) = (class_distance_ratio(a.codes.view(), &data.train), class_distance_ratio(b.codes.view(), &data.train));
        wins += usize::from(ra < rb);
        pairs.push(format!("{ra:.3}/{rb:.3}"));
    }
    outcome(wins >= 8, format!("β=1 smaller on {wins}/{SEEDS} seeds (β=1/β=0: {})", pairs.join(" ")))
}

// ---------------------------------------------------------------------------
// 7. End-to-end accuracy

fn test_accuracy(data: &crodomsc::SynthOutput, hp: &Hyperparams) -> f64 {
    let result = fit(&data.train, hp).expect("fit");
    let centroids = fit_centroids(result.codes.view(), &data.train.labels).expect("centroids");
    let test_codes = encode_batch(data.test.features.view(), &result.model).expect("encode");
    let hits = test_codes
        .columns()
        .into_iter()
        .zip(&data.test.labels)
        .filter(|(code, truth)| predict(&centroids, code.view()) == truth.as_str())
        .count();
    hits as f64 / data.test.labels.len() as f64
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..SEEDS {
        let data = synth(seed);
        let ours = test_accuracy(&data, &hyper(1.0, 1.0, seed));
        let plain = test_accuracy(&data, &hyper(0.0, 0.0, seed));
        wins += usize::from(ours >= plain);
        pairs.push(format!("{ours:.3}/{plain:.3}"));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        wins >= 8 && secs < 180.0,
        format!("≥ plain on {wins}/{SEEDS} seeds (ours/plain: {}), {secs:.2}s", pairs.join(" ")),
    )
}

// ---------------------------------------------------------------------------
// 9. CLI determinism

const EVAL_OUTPUTS: [&str; 4] = ["model.txt", "codes.csv", "history.csv", "report.csv"];

fn run_eval(bin: &str, data: &Path, out: &Path) -> Result<Vec<u8>, String> {
    std::fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let output = Command::new(bin)
        .arg("eval")
        .arg("--train-features")
        .arg(data.join("train_features.csv"))
        .arg("--train-meta")
        .arg(data.join("train_meta.csv"))
        .arg("--test-features")
        .arg(data.join("test_features.csv"))
        .arg("--test-meta")
        .arg(data.join("test_meta.csv"))
        .args(["--k", "15", "--iters", "10", "--seed", "3"])
        .arg("--model-out")
        .arg(out.join(EVAL_OUTPUTS[0]))
        .arg("--codes-out")
        .arg(out.join(EVAL_OUTPUTS[1]))
        .arg("--history-out")
        .arg(out.join(EVAL_OUTPUTS[2]))
        .arg("--report-out")
        .arg(out.join(EVAL_OUTPUTS[3]))
        .output()
        .map_err(|e| e.to_string())?;
    if !output.status.success() {
        return Err(String::from_utf8_lossy(&output.stderr).into_owned());
    }
    Ok(output.stdout)
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_crodomsc");
    let dir = tempfile::tempdir().expect("tempdir");
    let data = dir.path().join("data");
    let status = Command::new(bin)
        .arg("synth")
        .arg("--out-dir")
        .arg(&data)
        .args(["--seed", "3"])
        .output()
        .expect("run synth");
    if !status.status.success() {
        return outcome(false, format!("synth failed: {}", String::from_utf8_lossy(&status.stderr)));
    }
    let (a, b) = (dir.path().join("run_a"), dir.path().join("run_b"));
    let (out_a, out_b) = match (run_eval(bin, &data, &a), run_eval(bin, &data, &b)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("eval failed: {e}")),
    };
    let mut differing: Vec<&str> = EVAL_OUTPUTS
        .iter()
        .copied()
        .filter(|name| std::fs::read(a.join(name)).ok() != std::fs::read(b.join(name)).ok())
        .collect();
    if out_a != out_b {
        differing.push("stdout");
    }
    let detail = if differing.is_empty() {
        format!("{} files and stdout byte-identical", EVAL_OUTPUTS.len())
    } else {
        format!("differs: {}", differing.join(", "))
    };
    outcome(differing.is_empty(), detail)
}

fn main() {
    let (monotone, feasible) = monotone_and_feasible();
    let results = [
        ("1 oracle equivalence", oracle_equivalence()),
        ("2 soft-threshold closed form", soft_threshold_check()),
        ("3 objective monotonicity", monotone),
        ("4 plain sparse coding degeneration", plain_degeneration()),
        ("5 MMD ablation", mmd_ablation()),
        ("6 label ablation", label_ablation()),
        ("7 end-to-end adaptation", end_to_end()),
        ("8 codebook feasibility and optimality", feasible),
        ("9 CLI determinism", cli_determinism()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
