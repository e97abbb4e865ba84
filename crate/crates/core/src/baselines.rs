//! Model-based importance baselines: permutation feature importance (PFI)
//! and Monte-Carlo permutation Shapley values.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{self, accuracy, majority_class, stratified_folds, ClassifierSpec};
use crate::scoring::{famex, ranking, FamexConfig};
use crate::seed;

pub const DEFAULT_REPEATS: usize = 10;
pub const DEFAULT_PERMUTATIONS: usize = 128;

/// Share of rows held out for evaluating importance, as `1 / HOLDOUT_FOLDS`.
const HOLDOUT_FOLDS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Famex,
    Pfi,
    ShapleyMc,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Famex, Method::Pfi, Method::ShapleyMc];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Famex => "famex",
            Method::Pfi => "pfi",
            Method::ShapleyMc => "shapley_mc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "famex" => Ok(Method::Famex),
            "pfi" | "permutation" => Ok(Method::Pfi),
            "shapley_mc" | "shapley" | "shap" => Ok(Method::ShapleyMc),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{other}' (expected famex, pfi or shapley_mc)"
            ))),
        }
    }
}

/// One importance value per feature, tagged with the method that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector {
    pub method: Method,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub seed: u64,
    pub metadata: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct ScoreRow {
    name: String,
    importance_score: f64,
    rank: usize,
}

#[derive(Serialize, Deserialize)]
struct ImportanceJson {
    method: Method,
    seed: u64,
    metadata: BTreeMap<String, Value>,
    scores: Vec<ScoreRow>,
}

impl ImportanceVector {
    fn new(method: Method, values: Vec<f64>, seed: u64) -> Self {
        ImportanceVector {
            method,
            names: (0..values.len()).map(|i| format!("f{i}")).collect(),
            values,
            seed,
            metadata: BTreeMap::new(),
        }
    }

    /// Replaces the default `f0, f1, ...` names.
    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                left: names.len(),
                right: self.values.len(),
            });
        }
        self.names = names;
        Ok(self)
    }

    /// Feature names from most to least important; ties keep column order.
    pub fn ranked_names(&self) -> Vec<String> {
        ranking(&self.values)
            .into_iter()
            .map(|i| self.names[i].clone())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut ranks = vec![0; self.values.len()];
        for (r, i) in ranking(&self.values).into_iter().enumerate() {
            ranks[i] = r + 1;
        }
        let doc = ImportanceJson {
            method: self.method,
            seed: self.seed,
            metadata: self.metadata.clone(),
            scores: self
                .names
                .iter()
                .zip(&self.values)
                .zip(ranks)
                .map(|((name, &importance_score), rank)| ScoreRow {
                    name: name.clone(),
                    importance_score,
                    rank,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ImportanceJson = serde_json::from_str(text)?;
        let (names, values) = doc
            .scores
            .into_iter()
            .map(|r| (r.name, r.importance_score))
            .unzip();
        Ok(ImportanceVector {
            method: doc.method,
            names,
            values,
            seed: doc.seed,
            metadata: doc.metadata,
        })
    }
}

/// Stratified split into (train, held-out) row indices, one quarter held out.
pub fn holdout_split(y: &[usize], seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let folds = stratified_folds(y, HOLDOUT_FOLDS, seed::derive(seed, &[seed::tag("holdout")]))?;
    Ok((0..y.len()).partition(|&i| folds[i] != 0))
}

fn check_inputs(x: ArrayView2<'_, f64>, y: &[usize]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    if x.ncols() == 0 {
        return Err(Error::EmptyInput("features"));
    }
    Ok(())
}

/// Accuracy drop on a held-out split when one column is shuffled.
///
/// The model is fit once on the training split; each feature is shuffled
/// `repeats` times with seeds derived from `(seed, feature, repeat)`.
pub fn permutation_importance(
    spec: &ClassifierSpec,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<ImportanceVector> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    check_inputs(x, y)?;
    let (train_idx, test_idx) = holdout_split(y, seed)?;
    let x_train = x.select(Axis(0), &train_idx);
    let y_train: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
    let x_test = x.select(Axis(0), &test_idx);
    let y_test: Vec<usize> = test_idx.iter().map(|&i| y[i]).collect();

    let model = models::train(spec, x_train.view(), &y_train)?;
    let baseline = accuracy(&model.predict(x_test.view())?, &y_test);

    let values = (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let mut shuffled = x_test.clone();
            let mut column: Vec<f64> = x_test.column(j).to_vec();
            let mut drop = 0.0;
            for r in 0..repeats {
                let mut rng = seed::rng(seed, &[seed::tag("pfi"), j as u64, r as u64]);
                column.shuffle(&mut rng);
                shuffled.column_mut(j).assign(&ndarray::ArrayView1::from(&column));
                drop += baseline - accuracy(&model.predict(shuffled.view())?, &y_test);
            }
            Ok(drop / repeats as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut v = ImportanceVector::new(Method::Pfi, values, seed);
    v.metadata.insert("repeats".into(), repeats.into());
    v.metadata.insert("classifier".into(), spec.kind().as_str().into());
    v.metadata.insert("baseline_accuracy".into(), baseline.into());
    Ok(v)
}

/// Held-out accuracy of a classifier retrained on a feature subset.
///
/// `v(∅)` is the accuracy of predicting the training majority class.
/// Values are memoized per subset and each subset trains with its own
/// derived seed, so `value` is a fixed function of the subset regardless
/// of evaluation order.
pub struct CharacteristicFunction {
    spec: ClassifierSpec,
    x_train: Array2<f64>,
    y_train: Vec<usize>,
    x_test: Array2<f64>,
    y_test: Vec<usize>,
    cache: Mutex<HashMap<Vec<usize>, f64>>,
}

impl CharacteristicFunction {
    /// Splits `(x, y)` into train and held-out parts with the same split PFI uses.
    pub fn new(spec: &ClassifierSpec, x: ArrayView2<'_, f64>, y: &[usize], seed: u64) -> Result<Self> {
        check_inputs(x, y)?;
        let (train_idx, test_idx) = holdout_split(y, seed)?;
        Ok(CharacteristicFunction {
            spec: spec.clone(),
            x_train: x.select(Axis(0), &train_idx),
            y_train: train_idx.iter().map(|&i| y[i]).collect(),
            x_test: x.select(Axis(0), &test_idx),
            y_test: test_idx.iter().map(|&i| y[i]).collect(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn n_features(&self) -> usize {
        self.x_train.ncols()
    }

    /// Number of distinct subsets evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.cache.lock().map(|c| c.len()).unwrap_or(0)
    }

    /// `v(subset)`; the subset may be given in any order.
    pub fn value(&self, subset: &[usize]) -> Result<f64> {
        let mut key = subset.to_vec();
        key.sort_unstable();
        key.dedup();
        if let Some(&j) = key.iter().find(|&&j| j >= self.n_features()) {
            return Err(Error::InvalidArgument(format!("feature index {j} out of range")));
        }
        if let Some(&v) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = self.compute(&key)?;
        self.cache.lock().expect("cache poisoned").insert(key, v);
        Ok(v)
    }

    fn compute(&self, subset: &[usize]) -> Result<f64> {
        if subset.is_empty() {
            let c = majority_class(&self.y_train).ok_or(Error::EmptyInput("training labels"))?;
            let pred = vec![c; self.y_test.len()];
            return Ok(accuracy(&pred, &self.y_test));
        }
        let parts: Vec<u64> = subset.iter().map(|&j| j as u64).collect();
        let spec = self.spec.with_seed(seed::derive(self.spec.seed, &parts));
        let model = models::train(&spec, self.x_train.select(Axis(1), subset).view(), &self.y_train)?;
        let pred = model.predict(self.x_test.select(Axis(1), subset).view())?;
        Ok(accuracy(&pred, &self.y_test))
    }
}

/// Monte-Carlo permutation estimate of Shapley values for an arbitrary game
/// on `n` players.
///
/// Each sampled ordering adds `v(S ∪ {i}) − v(S)` to player `i`, where `S` is
/// the set of players preceding `i`. Orderings are drawn from seeds derived
/// from `(seed, permutation index)` and summed in index order.
pub fn monte_carlo_shapley<F>(n: usize, permutations: usize, seed: u64, v: F) -> Result<Vec<f64>>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    if permutations == 0 {
        return Err(Error::InvalidArgument("permutations must be at least 1".into()));
    }
    let empty = v(&[])?;
    let contributions = (0..permutations)
        .into_par_iter()
        .map(|p| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut seed::rng(seed, &[seed::tag("shapley"), p as u64]));
            let mut phi = vec![0.0; n];
            let mut prefix = Vec::with_capacity(n);
            let mut prev = empty;
            for &i in &order {
                prefix.push(i);
                let cur = v(&prefix)?;
                phi[i] = cur - prev;
                prev = cur;
            }
            Ok(phi)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let mut total = vec![0.0; n];
    for phi in &contributions {
        for (t, c) in total.iter_mut().zip(phi) {
            *t += c;
        }
    }
    Ok(total.into_iter().map(|t| t / permutations as f64).collect())
}

/// Shapley importance where a coalition's worth is the held-out accuracy of
/// the classifier retrained on it.
pub fn shapley_importance(
    spec: &ClassifierSpec,
    x: ArrayView2<'_, f64>,
    y: &[usize],
    permutations: usize,
    seed: u64,
) -> Result<ImportanceVector> {
    let game = CharacteristicFunction::new(spec, x, y, seed)?;
    let values = monte_carlo_shapley(game.n_features(), permutations, seed, |s| game.value(s))?;
    let mut v = ImportanceVector::new(Method::ShapleyMc, values, seed);
    v.metadata.insert("permutations".into(), permutations.into());
    v.metadata.insert("classifier".into(), spec.kind().as_str().into());
    v.metadata.insert("subsets_evaluated".into(), game.evaluations().into());
    Ok(v)
}

/// Settings shared by every importance method when ranking a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceConfig {
    pub famex: FamexConfig,
    /// Classifier whose accuracy PFI and Shapley measure.
    pub explainer: ClassifierSpec,
    pub repeats: usize,
    pub permutations: usize,
    pub seed: u64,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        ImportanceConfig {
            famex: FamexConfig::default(),
            explainer: ClassifierSpec::new(models::ClassifierKind::DecisionTree, seed::DEFAULT_SEED),
            repeats: DEFAULT_REPEATS,
            permutations: DEFAULT_PERMUTATIONS,
            seed: seed::DEFAULT_SEED,
        }
    }
}

/// Importance of every feature of `dataset` under `method`, with feature names attached.
pub fn importance(dataset: &Dataset, method: Method, config: &ImportanceConfig) -> Result<ImportanceVector> {
    let x = dataset.samples.view();
    let y = &dataset.labels;
    let v = match method {
        Method::Famex => {
            let scores = famex(dataset, &config.famex)?;
            let mut v = ImportanceVector::new(Method::Famex, scores.importance(), config.seed);
            v.metadata.insert("bins".into(), config.famex.bins.into());
            v
        }
        Method::Pfi => permutation_importance(&config.explainer, x, y, config.repeats, config.seed)?,
        Method::ShapleyMc => {
            shapley_importance(&config.explainer, x, y, config.permutations, config.seed)?
        }
    };
    v.with_names(dataset.feature_names.clone())
}
