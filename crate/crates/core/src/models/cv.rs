//! Stratified k-fold cross-validation.

use std::collections::BTreeMap;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{accuracy, train, ClassifierSpec};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation across folds.
    pub std: f64,
    pub folds: usize,
    pub seed: u64,
}

/// Assigns each row a fold in `0..k` so that every class is spread evenly.
///
/// Rows of each class are shuffled, classes are concatenated in label order,
/// and the i-th row of that sequence goes to fold `i % k`.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 folds, got {k}")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    if let Some((&class, rows)) = by_class.iter().find(|(_, rows)| rows.len() < k) {
        return Err(Error::ClassTooSmall {
            class: class.to_string(),
            count: rows.len(),
            folds: k,
        });
    }
    let mut fold = vec![0; labels.len()];
    let mut position = 0;
    for (class, mut rows) in by_class {
        rows.shuffle(&mut seed::rng(seed, &[class as u64]));
        for i in rows {
            fold[i] = position % k;
            position += 1;
        }
    }
    Ok(fold)
}

/// Mean held-out accuracy of `spec` over `k` stratified folds.
pub fn stratified_kfold(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    k: usize,
    spec: &ClassifierSpec,
    seed: u64,
) -> Result<CvResult> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    let folds = stratified_folds(y, k, seed)?;
    let fold_accuracies = (0..k)
        .into_par_iter()
        .map(|f| {
            let (train_idx, test_idx): (Vec<usize>, Vec<usize>) =
                (0..y.len()).partition(|&i| folds[i] != f);
            let xt = x.select(Axis(0), &train_idx);
            let yt: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
            let model = train(&spec.with_seed(seed::derive(seed, &[spec.seed, f as u64])), xt.view(), &yt)?;
            let pred = model.predict(x.select(Axis(0), &test_idx).view())?;
            let truth: Vec<usize> = test_idx.iter().map(|&i| y[i]).collect();
            Ok(accuracy(&pred, &truth))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = fold_accuracies.iter().sum::<f64>() / k as f64;
    let std = (fold_accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / k as f64).sqrt();
    Ok(CvResult {
        fold_accuracies,
        mean,
        std,
        folds: k,
        seed,
    })
}
