//! `crodomsc` command line: `train`, `encode`, `eval` and `synth`.
//!
//! Exit codes: 0 on success, 1 on runtime errors, 2 on usage errors
//! (including out-of-range hyperparameters).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::classifier::{accuracy, fit_centroids, predict};
use crate::data::{Domain, Hyperparams, LaplacianScale};
use crate::encoder::encode_batch;
use crate::error::{Error, Result};
use crate::io;
use crate::regularizer::mmd_term;
use crate::synth::{generate, SynthConfig};
use crate::trainer::{fit, FitResult};

#[derive(Debug, Parser)]
#[command(name = "crodomsc", version, about = "Cross-domain sparse coding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a codebook and training codes.
    Train(TrainArgs),
    /// Encode samples with a trained model.
    Encode(EncodeArgs),
    /// Train, encode a held-out target set and report nearest-centroid accuracy.
    Eval(EvalArgs),
    /// Write a synthetic source/target dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    /// Laplacian divided by the squared number of labeled samples.
    Pairs,
    /// Laplacian used as built from the ±1 label matrix.
    Unit,
}

#[derive(Debug, Args)]
struct HyperArgs {
    #[arg(long, default_value_t = 128)]
    k: usize,
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 50)]
    iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ScaleArg::Pairs)]
    laplacian_scale: ScaleArg,
}

impl HyperArgs {
    fn hyperparams(&self) -> Hyperparams {
        Hyperparams {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            c: self.c,
            max_iters: self.iters,
            tol: self.tol,
            seed: self.seed,
            laplacian_scale: match self.laplacian_scale {
                ScaleArg::Pairs => LaplacianScale::LabeledPairs,
                ScaleArg::Unit => LaplacianScale::Unit,
            },
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Where to write the trained model.
    #[arg(long)]
    model_out: Option<PathBuf>,
    /// Where to write training codes (one row per sample, K columns).
    #[arg(long)]
    codes_out: Option<PathBuf>,
    /// Where to write the per-iteration objective breakdown.
    #[arg(long)]
    history_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    meta: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    codes_out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    train_features: PathBuf,
    #[arg(long)]
    train_meta: PathBuf,
    #[arg(long)]
    test_features: PathBuf,
    #[arg(long)]
    test_meta: PathBuf,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    out: OutputArgs,
    /// Where to write the key,value report that is also printed.
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 20)]
    dim: usize,
    #[arg(long, default_value_t = 15)]
    k_true: usize,
    #[arg(long, default_value_t = 30)]
    n_source: usize,
    #[arg(long, default_value_t = 30)]
    n_target: usize,
    #[arg(long, default_value_t = 40)]
    n_test: usize,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 3)]
    sparsity: usize,
    #[arg(long, default_value_t = 2.0)]
    shift: f64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0.25)]
    label_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `args` (including the program name) and runs the command, writing
/// normal output to `stdout` and diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(stdout, "{}", e.render())
            } else {
                write!(stderr, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::InvalidHyperparams(_) | Error::InvalidConfig(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Train(a) => train(a, stdout),
        Command::Encode(a) => encode(a),
        Command::Eval(a) => eval(a, stdout),
        Command::Synth(a) => synth(a, stdout),
    }
}

fn write_outputs(out: &OutputArgs, result: &FitResult) -> Result<()> {
    if let Some(p) = &out.model_out {
        io::save_model(p, &result.model)?;
    }
    if let Some(p) = &out.codes_out {
        io::write_matrix_rows(p, result.codes.view())?;
    }
    if let Some(p) = &out.history_out {
        io::write_history(p, &result.history)?;
    }
    Ok(())
}

fn train(args: TrainArgs, stdout: &mut dyn Write) -> Result<()> {
    let hyper = args.hyper.hyperparams();
    hyper.validate()?;
    let dataset = io::load_dataset(&args.features, &args.meta)?;
    let result = fit(&dataset, &hyper)?;
    write_outputs(&args.out, &result)?;
    let last = result.history.last().expect("history has the initial record");
    writeln!(stdout, "iterations,{}", last.iteration)?;
    writeln!(stdout, "stop_reason,{}", result.stop_reason.as_str())?;
    writeln!(stdout, "objective,{}", io::format_float(last.terms.total))?;
    Ok(())
}

fn encode(args: EncodeArgs) -> Result<()> {
    let model = io::load_model(&args.model)?;
    let features = io::read_features(&args.features)?;
    let codes = encode_batch(features.view(), &model)?;
    io::write_matrix_rows(&args.codes_out, codes.view())
}

fn eval(args: EvalArgs, stdout: &mut dyn Write) -> Result<()> {
    let hyper = args.hyper.hyperparams();
    hyper.validate()?;
    let train = io::load_dataset(&args.train_features, &args.train_meta)?;
    let test = io::load_samples(&args.test_features, &args.test_meta)?;
    if test.n_samples() == 0 {
        return Err(Error::EmptyInput);
    }
    let truths = test
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            l.clone().ok_or_else(|| Error::Parse {
                path: args.test_meta.clone(),
                line: i + 1,
                column: 2,
                message: "test samples need labels".into(),
            })
        })
        .collect::<Result<Vec<String>>>()?;

    let result = fit(&train, &hyper)?;
    write_outputs(&args.out, &result)?;
    let test_codes = encode_batch(test.features.view(), &result.model)?;
    let centroids = fit_centroids(result.codes.view(), &train.labels)?;
    let predictions: Vec<&str> = test_codes.columns().into_iter().map(|c| predict(&centroids, c)).collect();
    let acc = accuracy(&predictions, &truths)?;
    let mmd = mmd_term(result.codes.view(), &result.regularizer.pi);
    let last = result.history.last().expect("history has the initial record");

    let report = format!(
        "accuracy,{}\nmmd,{}\nobjective,{}\niterations,{}\nstop_reason,{}\nn_train,{}\nn_test,{}\n",
        io::format_float(acc),
        io::format_float(mmd),
        io::format_float(last.terms.total),
        last.iteration,
        result.stop_reason.as_str(),
        train.n_samples(),
        test.n_samples(),
    );
    if let Some(p) = &args.report_out {
        fs::write(p, &report)?;
    }
    stdout.write_all(report.as_bytes())?;
    Ok(())
}

fn synth(args: SynthArgs, stdout: &mut dyn Write) -> Result<()> {
    let config = SynthConfig {
        dim: args.dim,
        k_true: args.k_true,
        n_source: args.n_source,
        n_target: args.n_target,
        n_test: args.n_test,
        classes: args.classes,
        sparsity: args.sparsity,
        shift: args.shift,
        noise: args.noise,
        target_label_fraction: args.label_fraction,
        seed: args.seed,
    };
    let out = generate(&config)?;
    fs::create_dir_all(&args.out_dir)?;
    let paths = io::SynthPaths::in_dir(&args.out_dir);
    io::write_matrix_rows(&paths.train_features, out.train.features.view())?;
    io::write_meta(&paths.train_meta, &out.train.domains, &out.train.labels)?;
    io::write_matrix_rows(&paths.test_features, out.test.features.view())?;
    let test_labels: Vec<Option<String>> = out.test.labels.iter().cloned().map(Some).collect();
    io::write_meta(&paths.test_meta, &vec![Domain::Target; test_labels.len()], &test_labels)?;
    for p in [&paths.train_features, &paths.train_meta, &paths.test_features, &paths.test_meta] {
        writeln!(stdout, "wrote,{}", display(p))?;
    }
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
