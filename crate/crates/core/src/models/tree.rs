//! CART classification tree with Gini impurity.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Rng};

/// How many candidate features to examine at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt() as usize).max(1),
            MaxFeatures::Count(k) => k.clamp(1, n_features),
        }
    }
}

impl FromStr for MaxFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(MaxFeatures::All),
            "sqrt" => Ok(MaxFeatures::Sqrt),
            other => match other.parse::<usize>() {
                Ok(k) if k >= 1 => Ok(MaxFeatures::Count(k)),
                _ => Err(Error::InvalidArgument(format!(
                    "max_features must be 'all', 'sqrt' or a positive integer, got '{s}'"
                ))),
            },
        }
    }
}

impl fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaxFeatures::All => f.write_str("all"),
            MaxFeatures::Sqrt => f.write_str("sqrt"),
            MaxFeatures::Count(k) => write!(f, "{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: Some(10),
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl DecisionTree {
    pub(crate) fn fit(params: &TreeParams, x: ArrayView2<'_, f64>, y: &[usize], seed: u64) -> Self {
        let indices: Vec<usize> = (0..x.nrows()).collect();
        Self::fit_on(params, x, y, indices, &mut seed::rng(seed, &[]))
    }

    /// Grows a tree on the rows listed in `indices` (duplicates allowed).
    pub(crate) fn fit_on(
        params: &TreeParams,
        x: ArrayView2<'_, f64>,
        y: &[usize],
        mut indices: Vec<usize>,
        rng: &mut Rng,
    ) -> Self {
        let n_classes = y.iter().max().map_or(1, |c| c + 1);
        let d = x.ncols();
        let k = params.max_features.resolve(d);
        let min_leaf = params.min_samples_leaf.max(1);
        let mut nodes = vec![Node::Leaf { class: 0 }];
        // (node slot, start, end, depth)
        let mut stack = vec![(0usize, 0usize, indices.len(), 0usize)];
        let mut features: Vec<usize> = (0..d).collect();
        let mut counts = vec![0usize; n_classes];

        while let Some((slot, start, end, depth)) = stack.pop() {
            let rows = &mut indices[start..end];
            counts.iter_mut().for_each(|c| *c = 0);
            for &i in rows.iter() {
                counts[y[i]] += 1;
            }
            let majority = majority(&counts);
            let pure = counts[majority] == rows.len();
            let depth_reached = params.max_depth.is_some_and(|m| depth >= m);
            if pure || depth_reached || rows.len() < 2 * min_leaf {
                nodes[slot] = Node::Leaf { class: majority };
                continue;
            }

            if k < d {
                features.shuffle(rng);
            }
            let mut best: Option<Candidate> = None;
            for (pos, &f) in features.iter().enumerate() {
                if pos >= k && best.is_some() {
                    break;
                }
                if let Some(c) = best_split(x, y, rows, f, &counts, min_leaf) {
                    if best.as_ref().is_none_or(|b| c.score > b.score) {
                        best = Some(c);
                    }
                }
            }
            let Some(best) = best else {
                nodes[slot] = Node::Leaf { class: majority };
                continue;
            };

            sort_by_feature(x, rows, best.feature);
            let split = start + best.left_len;
            let left = nodes.len();
            nodes.push(Node::Leaf { class: majority });
            let right = nodes.len();
            nodes.push(Node::Leaf { class: majority });
            nodes[slot] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right,
            };
            stack.push((right, split, end, depth + 1));
            stack.push((left, start, split, depth + 1));
        }

        DecisionTree {
            nodes,
            n_features: d,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Features referenced by at least one split, ascending.
    pub fn used_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    pub(crate) fn predict_row(&self, row: impl Fn(usize) -> f64) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row(feature) <= threshold { left } else { right },
            }
        }
    }

    pub(crate) fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        x.rows()
            .into_iter()
            .map(|r| self.predict_row(|j| r[j]))
            .collect()
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    left_len: usize,
    /// Sum over children of (sum of squared class counts / child size); larger is purer.
    score: f64,
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

fn sort_by_feature(x: ArrayView2<'_, f64>, rows: &mut [usize], f: usize) {
    rows.sort_by(|&a, &b| {
        x[[a, f]]
            .total_cmp(&x[[b, f]])
            .then_with(|| a.cmp(&b))
    });
}

fn best_split(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    rows: &mut [usize],
    f: usize,
    totals: &[usize],
    min_leaf: usize,
) -> Option<Candidate> {
    sort_by_feature(x, rows, f);
    let n = rows.len();
    let mut left = vec![0usize; totals.len()];
    let mut right = totals.to_vec();
    let mut sq_left = 0.0;
    let mut sq_right: f64 = totals.iter().map(|&c| (c * c) as f64).sum();
    let mut best: Option<Candidate> = None;
    for p in 0..n - 1 {
        let c = y[rows[p]];
        sq_left += (2 * left[c] + 1) as f64;
        sq_right -= (2 * right[c] - 1) as f64;
        left[c] += 1;
        right[c] -= 1;
        let n_left = p + 1;
        let n_right = n - n_left;
        if n_left < min_leaf || n_right < min_leaf {
            continue;
        }
        let a = x[[rows[p], f]];
        let b = x[[rows[p + 1], f]];
        if a.partial_cmp(&b) != Some(Ordering::Less) {
            continue;
        }
        let score = sq_left / n_left as f64 + sq_right / n_right as f64;
        if best.as_ref().is_none_or(|bst| score > bst.score) {
            let mid = a + (b - a) / 2.0;
            let threshold = if mid > a && mid < b { mid } else { a };
            best = Some(Candidate {
                feature: f,
                threshold,
                left_len: n_left,
                score,
            });
        }
    }
    best
}
