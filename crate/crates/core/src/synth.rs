//! Synthetic two-domain datasets with a known dictionary.
//!
//! Every class owns a distinct subset of the ground-truth atoms together with
//! a fixed sign per atom. A sample of class `c` activates `sparsity` atoms of
//! that subset with magnitudes uniform in `[0.5, 1.5]`. Target-domain samples
//! (training and test) are additionally offset by one class-independent
//! vector of norm `shift`, which plain sparse coding has to spend codewords
//! on.

use ndarray::{Array1, Array2};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{Dataset, Domain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub dim: usize,
    pub k_true: usize,
    pub n_source: usize,
    /// Training samples of the target domain.
    pub n_target: usize,
    /// Held-out target samples.
    pub n_test: usize,
    pub classes: usize,
    /// Nonzeros per ground-truth code.
    pub sparsity: usize,
    pub shift: f64,
    pub noise: f64,
    /// Fraction of training target samples that keep their label.
    pub target_label_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            dim: 20,
            k_true: 15,
            n_source: 30,
            n_target: 30,
            n_test: 40,
            classes: 4,
            sparsity: 3,
            shift: 2.0,
            noise: 0.1,
            target_label_fraction: 0.25,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn atoms_per_class(&self) -> usize {
        self.sparsity.max(self.k_true.div_ceil(self.classes)).min(self.k_true)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.dim == 0 || self.k_true == 0 || self.n_source == 0 || self.n_target == 0 || self.n_test == 0 {
            return fail("dim, k_true and all sample counts must be at least 1".into());
        }
        if self.classes == 0 || self.classes > self.n_source.min(self.n_target) {
            return fail(format!("classes must be in 1..={}", self.n_source.min(self.n_target)));
        }
        if self.classes > self.k_true {
            return fail("classes must not exceed k_true".into());
        }
        if self.sparsity == 0 || self.sparsity > self.k_true {
            return fail(format!("sparsity must be in 1..={}", self.k_true));
        }
        if self.classes > 1 && self.atoms_per_class() == self.k_true {
            return fail("sparsity too large for classes to own distinct atom subsets".into());
        }
        if !(self.shift >= 0.0 && self.shift.is_finite()) || !(self.noise >= 0.0 && self.noise.is_finite()) {
            return fail("shift and noise must be finite and >= 0".into());
        }
        if !(0.0..=1.0).contains(&self.target_label_fraction) {
            return fail("target_label_fraction must be in [0, 1]".into());
        }
        Ok(())
    }
}

/// Held-out target samples with their true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    /// `D × M`.
    pub features: Array2<f64>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `D × K_true`, unit-norm columns.
    pub dictionary: Array2<f64>,
    /// `K_true × N` codes of the training samples.
    pub codes: Array2<f64>,
    /// `K_true × M` codes of the test samples.
    pub test_codes: Array2<f64>,
    pub shift_vector: Array1<f64>,
    /// Atom indices owned by each class.
    pub class_atoms: Vec<Vec<usize>>,
    /// Sign of each owned atom, aligned with `class_atoms`.
    pub class_signs: Vec<Vec<f64>>,
    /// Class index of every training sample.
    pub train_classes: Vec<usize>,
    sparsity: usize,
}

impl GroundTruth {
    /// Expected feature vector of a sample of `class` drawn from `domain`.
    pub fn class_mean(&self, class: usize, domain: Domain) -> Array1<f64> {
        let atoms = &self.class_atoms[class];
        let p_active = self.sparsity as f64 / atoms.len() as f64;
        let mut mean = Array1::zeros(self.dictionary.nrows());
        for (&atom, &sign) in atoms.iter().zip(&self.class_signs[class]) {
            // Magnitudes are uniform on [0.5, 1.5], mean 1.
            mean.scaled_add(sign * p_active, &self.dictionary.column(atom));
        }
        if domain == Domain::Target {
            mean += &self.shift_vector;
        }
        mean
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub train: Dataset,
    pub test: TestSet,
    pub truth: GroundTruth,
}

pub fn class_name(class: usize) -> String {
    format!("c{class}")
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Array1<f64> {
    loop {
        let v: Array1<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.dot(&v).sqrt();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (d, k) = (config.dim, config.k_true);

    let mut dictionary = Array2::zeros((d, k));
    for mut col in dictionary.columns_mut() {
        col.assign(&unit_vector(&mut rng, d));
    }
    let per_class = config.atoms_per_class();
    let class_atoms: Vec<Vec<usize>> = (0..config.classes)
        .map(|c| {
            let start = c * k / config.classes;
            (0..per_class).map(|j| (start + j) % k).collect()
        })
        .collect();
    let class_signs: Vec<Vec<f64>> = class_atoms
        .iter()
        .map(|atoms| atoms.iter().map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect())
        .collect();
    let shift_vector = unit_vector(&mut rng, d) * config.shift;
    let noise = Normal::new(0.0, config.noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let draw = |rng: &mut ChaCha8Rng, class: usize, target: bool| {
        let atoms = &class_atoms[class];
        let mut code = Array1::<f64>::zeros(k);
        for pos in index::sample(rng, atoms.len(), config.sparsity).into_iter() {
            code[atoms[pos]] = class_signs[class][pos] * rng.random_range(0.5..1.5);
        }
        let mut x = dictionary.dot(&code);
        if config.noise > 0.0 {
            for v in x.iter_mut() {
                *v += noise.sample(rng);
            }
        }
        if target {
            x += &shift_vector;
        }
        (x, code)
    };

    let n_train = config.n_source + config.n_target;
    let mut features = Array2::zeros((d, n_train));
    let mut codes = Array2::zeros((k, n_train));
    let mut domains = Vec::with_capacity(n_train);
    let mut train_classes = Vec::with_capacity(n_train);
    for i in 0..n_train {
        let target = i >= config.n_source;
        let local = if target { i - config.n_source } else { i };
        let class = local % config.classes;
        let (x, code) = draw(&mut rng, class, target);
        features.column_mut(i).assign(&x);
        codes.column_mut(i).assign(&code);
        domains.push(if target { Domain::Target } else { Domain::Source });
        train_classes.push(class);
    }

    let n_labeled_targets = (config.target_label_fraction * config.n_target as f64).round() as usize;
    let mut target_order: Vec<usize> = (0..config.n_target).collect();
    target_order.shuffle(&mut rng);
    let mut keep_label = vec![true; n_train];
    for &t in &target_order[n_labeled_targets..] {
        keep_label[config.n_source + t] = false;
    }
    let labels = train_classes
        .iter()
        .zip(&keep_label)
        .map(|(&c, &keep)| keep.then(|| class_name(c)))
        .collect();

    let mut test_features = Array2::zeros((d, config.n_test));
    let mut test_codes = Array2::zeros((k, config.n_test));
    let mut test_labels = Vec::with_capacity(config.n_test);
    for i in 0..config.n_test {
        let class = i % config.classes;
        let (x, code) = draw(&mut rng, class, true);
        test_features.column_mut(i).assign(&x);
        test_codes.column_mut(i).assign(&code);
        test_labels.push(class_name(class));
    }

    Ok(SynthOutput {
        train: Dataset::new(features, domains, labels),
        test: TestSet {
            features: test_features,
            labels: test_labels,
        },
        truth: GroundTruth {
            dictionary,
            codes,
            test_codes,
            shift_vector,
            class_atoms,
            class_signs,
            train_classes,
            sparsity: config.sparsity,
        },
    })
}
