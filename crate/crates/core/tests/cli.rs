use std::path::Path;

use crodomsc::cli::run;
use crodomsc::io::{read_history_totals, SynthPaths};

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("crodomsc").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth_into(dir: &Path) -> SynthPaths {
    let (code, out, err) = run_cli(&["synth", "--out-dir", path(dir), "--seed", "5"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().filter(|l| l.starts_with("wrote,")).count(), 4);
    SynthPaths::in_dir(dir)
}

#[test]
fn synth_train_eval_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path());
    let model = dir.path().join("model.txt");
    let history = dir.path().join("history.csv");
    let (code, out, err) = run_cli(&[
        "train",
        "--features",
        path(&data.train_features),
        "--meta",
        path(&data.train_meta),
        "--k",
        "15",
        "--iters",
        "10",
        "--model-out",
        path(&model),
        "--history-out",
        path(&history),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("stop_reason,"));
    assert!(model.exists());

    let totals = read_history_totals(&history).unwrap();
    assert!(totals.len() >= 2);
    for w in totals.windows(2) {
        assert!(w[1] <= w[0] + 1e-6, "{totals:?}");
    }

    let (code, out, err) = run_cli(&[
        "eval",
        "--train-features",
        path(&data.train_features),
        "--train-meta",
        path(&data.train_meta),
        "--test-features",
        path(&data.test_features),
        "--test-meta",
        path(&data.test_meta),
        "--k",
        "15",
        "--iters",
        "10",
    ]);
    assert_eq!(code, 0, "{err}");
    let acc: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("accuracy,"))
        .expect("accuracy line")
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert!(out.lines().any(|l| l.starts_with("mmd,")));
}

#[test]
fn zero_alpha_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path());
    let (code, _, err) = run_cli(&[
        "train",
        "--features",
        path(&data.train_features),
        "--meta",
        path(&data.train_meta),
        "--alpha",
        "0",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("alpha"), "{err}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let (code, _, _) = run_cli(&["train", "--bogus"]);
    assert_eq!(code, 2);
}

#[test]
fn encode_rejects_mismatched_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path());
    let model = dir.path().join("model.txt");
    let (code, _, err) = run_cli(&[
        "train",
        "--features",
        path(&data.train_features),
        "--meta",
        path(&data.train_meta),
        "--k",
        "6",
        "--iters",
        "2",
        "--model-out",
        path(&model),
    ]);
    assert_eq!(code, 0, "{err}");

    let narrow = dir.path().join("narrow.csv");
    std::fs::write(&narrow, "1,2,3\n4,5,6\n").unwrap();
    let codes = dir.path().join("codes.csv");
    let (code, _, err) = run_cli(&["encode", "--model", path(&model), "--features", path(&narrow), "--codes-out", path(&codes)]);
    assert_eq!(code, 1);
    assert!(err.to_lowercase().contains("dimension"), "{err}");
}

#[test]
fn encode_writes_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth_into(dir.path());
    let model = dir.path().join("model.txt");
    let (code, _, err) = run_cli(&[
        "train",
        "--features",
        path(&data.train_features),
        "--meta",
        path(&data.train_meta),
        "--k",
        "8",
        "--iters",
        "3",
        "--model-out",
        path(&model),
    ]);
    assert_eq!(code, 0, "{err}");
    let codes = dir.path().join("codes.csv");
    let (code, _, err) = run_cli(&[
        "encode",
        "--model",
        path(&model),
        "--features",
        path(&data.test_features),
        "--codes-out",
        path(&codes),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&codes).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r.split(',').count() == 8));
}
