//! Bagged ensemble of CART trees with per-split feature subsampling.

use ndarray::ArrayView2;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, MaxFeatures, TreeParams};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_classes: usize,
    n_features: usize,
}

impl RandomForest {
    pub(crate) fn fit(params: &ForestParams, x: ArrayView2<'_, f64>, y: &[usize], seed: u64) -> Self {
        let m = x.nrows();
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
            max_features: params.max_features,
        };
        let trees = (0..params.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed, &[t as u64]);
                let sample: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
                DecisionTree::fit_on(&tree_params, x, y, sample, &mut rng)
            })
            .collect();
        RandomForest {
            trees,
            n_classes: y.iter().max().map_or(1, |c| c + 1),
            n_features: x.ncols(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub(crate) fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        let mut votes = vec![0usize; self.n_classes];
        x.rows()
            .into_iter()
            .map(|row| {
                votes.iter_mut().for_each(|v| *v = 0);
                for t in &self.trees {
                    votes[t.predict_row(|j| row[j])] += 1;
                }
                let mut best = 0;
                for (c, &v) in votes.iter().enumerate() {
                    if v > votes[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}
