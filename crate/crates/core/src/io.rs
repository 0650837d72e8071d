//! Delimited-text file formats.
//!
//! * Feature files: one sample per row, comma separated, optional header.
//! * Meta files: one `domain,label` row per sample; domain is `S` or `T`,
//!   label `?` marks an unlabeled sample.
//! * Model files: a `crodomsc-v1 D K alpha beta gamma c` header line
//!   followed by one line of `D` values per codeword.
//!
//! Samples are rows on disk and columns in memory; the readers and writers
//! own that transpose. Floats are written in the shortest form that parses
//! back to the same value.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};

use crate::data::{validate_dataset, Dataset, Domain, Hyperparams, Model};
use crate::error::{Error, Result};
use crate::trainer::TrainHistory;

pub const MODEL_VERSION: &str = "crodomsc-v1";
pub const UNLABELED: &str = "?";

fn parse_error(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_error(path, line, 0, format!("{other:?}")),
    }
}

/// Reads a feature file into a `D × N` matrix (rows become columns).
pub fn read_features(path: &Path) -> Result<Array2<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (n, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(n + 1);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(c, field)| field.parse::<f64>().map_err(|_| c))
            .collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if n == 0 => continue, // header row
            Err(c) => return Err(parse_error(path, line, c + 1, format!("not a number: {:?}", &record[c]))),
        };
        if let Some(c) = values.iter().position(|v| !v.is_finite()) {
            return Err(parse_error(path, line, c + 1, "non-finite value"));
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(parse_error(path, line, values.len().min(w) + 1, format!("expected {w} columns, found {}", values.len())));
            }
            _ => {}
        }
        rows.push(values);
    }
    let d = width.unwrap_or(0);
    Ok(Array2::from_shape_fn((d, rows.len()), |(r, c)| rows[c][r]))
}

/// Reads a meta file into aligned domain tags and optional labels.
pub fn read_meta(path: &Path) -> Result<(Vec<Domain>, Vec<Option<String>>)> {
    let mut domains = Vec::new();
    let mut labels = Vec::new();
    for (n, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(n + 1);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let domain = match record.get(0) {
            Some("S") => Domain::Source,
            Some("T") => Domain::Target,
            _ if n == 0 => continue, // header row
            Some(other) => return Err(parse_error(path, line, 1, format!("domain must be S or T, found {other:?}"))),
            None => unreachable!(),
        };
        if record.len() != 2 {
            return Err(parse_error(path, line, record.len().min(2) + 1, format!("expected 2 columns, found {}", record.len())));
        }
        let label = match &record[1] {
            UNLABELED => None,
            "" => return Err(parse_error(path, line, 2, "empty label (use ? for unlabeled)")),
            l => Some(l.to_string()),
        };
        domains.push(domain);
        labels.push(label);
    }
    Ok((domains, labels))
}

/// Loads features and meta without enforcing the training-set invariants.
pub fn load_samples(features_path: &Path, meta_path: &Path) -> Result<Dataset> {
    let features = read_features(features_path)?;
    let (domains, labels) = read_meta(meta_path)?;
    if domains.len() != features.ncols() {
        return Err(parse_error(
            meta_path,
            domains.len().min(features.ncols()) + 1,
            0,
            format!("row count mismatch: {} feature rows, {} meta rows", features.ncols(), domains.len()),
        ));
    }
    Ok(Dataset::new(features, domains, labels))
}

/// Loads a training dataset and validates it.
pub fn load_dataset(features_path: &Path, meta_path: &Path) -> Result<Dataset> {
    let dataset = load_samples(features_path, meta_path)?;
    validate_dataset(&dataset).into_result()?;
    Ok(dataset)
}

/// Writes a `D × N` matrix as N rows of D values.
pub fn write_matrix_rows(path: &Path, matrix: ArrayView2<'_, f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for col in matrix.columns() {
        let line: Vec<String> = col.iter().map(|&v| format_float(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_meta(path: &Path, domains: &[Domain], labels: &[Option<String>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for (d, l) in domains.iter().zip(labels) {
        writeln!(out, "{},{}", d.tag(), l.as_deref().unwrap_or(UNLABELED))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let h = &model.hyperparams;
    writeln!(
        out,
        "{MODEL_VERSION} {} {} {} {} {} {}",
        model.dim(),
        model.n_codewords(),
        format_float(h.alpha),
        format_float(h.beta),
        format_float(h.gamma),
        format_float(h.c)
    )?;
    for col in model.codebook.columns() {
        let line: Vec<String> = col.iter().map(|&v| format_float(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a model file. Hyperparameters not stored in the file keep their
/// defaults.
pub fn load_model(path: &Path) -> Result<Model> {
    let file = BufReader::new(File::open(path)?);
    let mut lines = file.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&MODEL_VERSION) || fields.len() != 7 {
        return Err(Error::VersionMismatch(format!("expected a \"{MODEL_VERSION} D K alpha beta gamma c\" header, found {header:?}")));
    }
    let int = |i: usize| fields[i].parse::<usize>().map_err(|_| parse_error(path, 1, i + 1, format!("bad integer {:?}", fields[i])));
    let float = |i: usize| fields[i].parse::<f64>().map_err(|_| parse_error(path, 1, i + 1, format!("bad number {:?}", fields[i])));
    let (d, k) = (int(1)?, int(2)?);
    let hyperparams = Hyperparams {
        k,
        alpha: float(3)?,
        beta: float(4)?,
        gamma: float(5)?,
        c: float(6)?,
        ..Hyperparams::default()
    };

    let mut codebook = Array2::zeros((d, k));
    let mut read = 0;
    for (n, line) in lines.enumerate() {
        let line = line?;
        let lineno = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        if read == k {
            return Err(parse_error(path, lineno, 1, format!("more than {k} codeword lines")));
        }
        let values: Vec<&str> = line.split(',').collect();
        if values.len() != d {
            return Err(parse_error(path, lineno, values.len().min(d) + 1, format!("expected {d} values, found {}", values.len())));
        }
        for (r, v) in values.iter().enumerate() {
            codebook[[r, read]] = v
                .trim()
                .parse::<f64>()
                .map_err(|_| parse_error(path, lineno, r + 1, format!("not a number: {v:?}")))?;
        }
        read += 1;
    }
    if read != k {
        return Err(parse_error(path, read + 2, 1, format!("expected {k} codeword lines, found {read}")));
    }
    Model::new(codebook, hyperparams).map_err(|e| match e {
        Error::InvalidHyperparams(m) => parse_error(path, 1, 0, m),
        other => other,
    })
}

pub const HISTORY_HEADER: &str = "iteration,reconstruction,laplacian,mmd,l1,total,safeguard";

pub fn write_history(path: &Path, history: &TrainHistory) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{HISTORY_HEADER}")?;
    for r in &history.records {
        let t = r.terms;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.iteration,
            format_float(t.reconstruction),
            format_float(t.laplacian),
            format_float(t.mmd),
            format_float(t.l1),
            format_float(t.total),
            u8::from(r.safeguard)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the `total` column back from a history file.
pub fn read_history_totals(path: &Path) -> Result<Vec<f64>> {
    let mut totals = Vec::new();
    for (n, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if n == 0 {
            continue;
        }
        let field = record.get(5).ok_or_else(|| parse_error(path, n + 1, 6, "missing total column"))?;
        totals.push(field.parse::<f64>().map_err(|_| parse_error(path, n + 1, 6, "not a number"))?);
    }
    Ok(totals)
}

/// Standard file names written by the `synth` subcommand.
pub struct SynthPaths {
    pub train_features: PathBuf,
    pub train_meta: PathBuf,
    pub test_features: PathBuf,
    pub test_meta: PathBuf,
}

impl SynthPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            train_features: dir.join("train_features.csv"),
            train_meta: dir.join("train_meta.csv"),
            test_features: dir.join("test_features.csv"),
            test_meta: dir.join("test_meta.csv"),
        }
    }
}
