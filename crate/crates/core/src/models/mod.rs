//! From-scratch classifiers used to evaluate feature subsets.
//!
//! Labels are class indices (`usize`). Every model is deterministic given its
//! [`ClassifierSpec`] seed and the training data.

mod cv;
mod forest;
mod naive_bayes;
mod svm;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cv::{stratified_folds, stratified_kfold, CvResult};
pub use forest::{ForestParams, RandomForest};
pub use naive_bayes::{GaussianNb, NaiveBayesParams};
pub use svm::{LinearSvm, SvmParams};
pub use tree::{DecisionTree, MaxFeatures, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Svm,
    DecisionTree,
    RandomForest,
    NaiveBayes,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Svm,
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::NaiveBayes,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::NaiveBayes => "naive_bayes",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "svm" => Ok(ClassifierKind::Svm),
            "dt" | "tree" | "decision_tree" => Ok(ClassifierKind::DecisionTree),
            "rf" | "forest" | "random_forest" => Ok(ClassifierKind::RandomForest),
            "nb" | "naive_bayes" => Ok(ClassifierKind::NaiveBayes),
            other => Err(Error::InvalidArgument(format!("unknown classifier '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparameters {
    Svm(SvmParams),
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    NaiveBayes(NaiveBayesParams),
}

impl Hyperparameters {
    pub fn defaults(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Svm => Hyperparameters::Svm(SvmParams::default()),
            ClassifierKind::DecisionTree => Hyperparameters::DecisionTree(TreeParams::default()),
            ClassifierKind::RandomForest => Hyperparameters::RandomForest(ForestParams::default()),
            ClassifierKind::NaiveBayes => Hyperparameters::NaiveBayes(NaiveBayesParams::default()),
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            Hyperparameters::Svm(_) => ClassifierKind::Svm,
            Hyperparameters::DecisionTree(_) => ClassifierKind::DecisionTree,
            Hyperparameters::RandomForest(_) => ClassifierKind::RandomForest,
            Hyperparameters::NaiveBayes(_) => ClassifierKind::NaiveBayes,
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let kind = self.kind();
        let unknown = || Error::UnknownHyperparameter {
            kind: kind.to_string(),
            key: key.to_string(),
        };
        match self {
            Hyperparameters::Svm(p) => match key {
                "c" => p.c = parse_positive(key, value)?,
                "epochs" => p.epochs = parse_count(key, value)?,
                _ => return Err(unknown()),
            },
            Hyperparameters::DecisionTree(p) => match key {
                "max_depth" => p.max_depth = parse_depth(value)?,
                "min_samples_leaf" => p.min_samples_leaf = parse_count(key, value)?,
                _ => return Err(unknown()),
            },
            Hyperparameters::RandomForest(p) => match key {
                "n_trees" => p.n_trees = parse_count(key, value)?,
                "max_depth" => p.max_depth = parse_depth(value)?,
                "min_samples_leaf" => p.min_samples_leaf = parse_count(key, value)?,
                "max_features" => p.max_features = value.parse()?,
                _ => return Err(unknown()),
            },
            Hyperparameters::NaiveBayes(p) => match key {
                "var_smoothing" => {
                    let v: f64 = parse_f64(key, value)?;
                    if !(v >= 0.0) {
                        return Err(Error::InvalidArgument(format!(
                            "var_smoothing must be non-negative, got {value}"
                        )));
                    }
                    p.var_smoothing = v;
                }
                _ => return Err(unknown()),
            },
        }
        Ok(())
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{key}: expected a number, got '{value}'")))
}

fn parse_positive(key: &str, value: &str) -> Result<f64> {
    let v = parse_f64(key, value)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!("{key} must be positive, got {value}")))
    }
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    match value.trim().parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(Error::InvalidArgument(format!(
            "{key}: expected a positive integer, got '{value}'"
        ))),
    }
}

fn parse_depth(value: &str) -> Result<Option<usize>> {
    if value.trim().eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse_count("max_depth", value).map(Some)
    }
}

/// A classifier kind with its hyperparameters and training seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind, seed: u64) -> Self {
        ClassifierSpec {
            hyperparameters: Hyperparameters::defaults(kind),
            seed,
        }
    }

    /// Builds a spec from `key=value` overrides, rejecting unknown keys.
    pub fn with_params<'a>(
        kind: ClassifierKind,
        params: impl IntoIterator<Item = (&'a str, &'a str)>,
        seed: u64,
    ) -> Result<Self> {
        let mut spec = ClassifierSpec::new(kind, seed);
        for (k, v) in params {
            spec.hyperparameters.set(k.trim(), v)?;
        }
        Ok(spec)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.hyperparameters.set(key.trim(), value)
    }

    pub fn kind(&self) -> ClassifierKind {
        self.hyperparameters.kind()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ClassifierSpec {
            hyperparameters: self.hyperparameters.clone(),
            seed,
        }
    }
}

/// A fitted classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Svm(LinearSvm),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    NaiveBayes(GaussianNb),
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Svm(m) => m.n_features(),
            TrainedModel::DecisionTree(m) => m.n_features(),
            TrainedModel::RandomForest(m) => m.n_features(),
            TrainedModel::NaiveBayes(m) => m.n_features(),
        }
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        Ok(match self {
            TrainedModel::Svm(m) => m.predict(x),
            TrainedModel::DecisionTree(m) => m.predict(x),
            TrainedModel::RandomForest(m) => m.predict(x),
            TrainedModel::NaiveBayes(m) => m.predict(x),
        })
    }
}

/// Fits the classifier described by `spec`.
pub fn train(spec: &ClassifierSpec, x: ArrayView2<'_, f64>, y: &[usize]) -> Result<TrainedModel> {
    check_training_data(x, y)?;
    Ok(match &spec.hyperparameters {
        Hyperparameters::Svm(p) => TrainedModel::Svm(LinearSvm::fit(p, x, y, spec.seed)),
        Hyperparameters::DecisionTree(p) => {
            TrainedModel::DecisionTree(DecisionTree::fit(p, x, y, spec.seed))
        }
        Hyperparameters::RandomForest(p) => {
            TrainedModel::RandomForest(RandomForest::fit(p, x, y, spec.seed))
        }
        Hyperparameters::NaiveBayes(p) => TrainedModel::NaiveBayes(GaussianNb::fit(p, x, y)),
    })
}

pub fn predict(model: &TrainedModel, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    model.predict(x)
}

fn check_training_data(x: ArrayView2<'_, f64>, y: &[usize]) -> Result<()> {
    if x.nrows() == 0 || y.is_empty() {
        return Err(Error::EmptyInput("training data"));
    }
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    if x.ncols() == 0 {
        return Err(Error::EmptyInput("training features"));
    }
    let first = y[0];
    if y.iter().all(|&c| c == first) {
        return Err(Error::TooFewClasses(1));
    }
    Ok(())
}

/// Fraction of positions where `predicted` equals `truth`; 0 for empty input.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Most frequent label; ties go to the smallest class index.
pub fn majority_class(y: &[usize]) -> Option<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in y {
        *counts.entry(c).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c)
}

/// Sorted distinct labels.
pub(crate) fn distinct_classes(y: &[usize]) -> Vec<usize> {
    let mut c = y.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}
