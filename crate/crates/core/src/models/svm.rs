//! Linear SVM trained with stochastic subgradient descent (Pegasos) on the
//! hinge loss. Multi-class problems use one-vs-rest.

use ndarray::{ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::distinct_classes;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Inverse regularization strength; the step schedule uses `lambda = 1 / (c * m)`.
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            epochs: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    classes: Vec<usize>,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// One weight vector per binary problem; the last entry is the bias.
    weights: Vec<Vec<f64>>,
}

impl LinearSvm {
    pub(crate) fn fit(params: &SvmParams, x: ArrayView2<'_, f64>, y: &[usize], seed: u64) -> Self {
        let (m, d) = x.dim();
        let classes = distinct_classes(y);

        // canonical row order makes the fit independent of input row order
        let mut rows: Vec<(Vec<f64>, usize)> = (0..m).map(|i| (x.row(i).to_vec(), y[i])).collect();
        rows.sort_by(|a, b| {
            a.0.iter()
                .zip(&b.0)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });

        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for j in 0..d {
            let mu = rows.iter().map(|r| r.0[j]).sum::<f64>() / m as f64;
            let var = rows.iter().map(|r| (r.0[j] - mu) * (r.0[j] - mu)).sum::<f64>() / m as f64;
            mean[j] = mu;
            scale[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        for (r, _) in rows.iter_mut() {
            for j in 0..d {
                r[j] = (r[j] - mean[j]) / scale[j];
            }
            r.push(1.0);
        }

        let problems: Vec<usize> = if classes.len() == 2 {
            vec![classes[1]]
        } else {
            classes.clone()
        };
        let lambda = 1.0 / (params.c * m as f64);
        let weights = problems
            .iter()
            .enumerate()
            .map(|(k, &positive)| {
                let targets: Vec<f64> = rows
                    .iter()
                    .map(|(_, c)| if *c == positive { 1.0 } else { -1.0 })
                    .collect();
                pegasos(&rows, &targets, lambda, params.epochs, seed::derive(seed, &[k as u64]))
            })
            .collect();

        LinearSvm {
            classes,
            mean,
            scale,
            weights,
        }
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    fn decision(&self, w: &[f64], x: ArrayView1<'_, f64>) -> f64 {
        let d = self.mean.len();
        let mut s = w[d];
        for j in 0..d {
            s += w[j] * (x[j] - self.mean[j]) / self.scale[j];
        }
        s
    }

    pub(crate) fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        x.rows()
            .into_iter()
            .map(|row| {
                if self.classes.len() == 2 {
                    if self.decision(&self.weights[0], row) > 0.0 {
                        self.classes[1]
                    } else {
                        self.classes[0]
                    }
                } else {
                    let mut best = 0;
                    let mut best_score = f64::NEG_INFINITY;
                    for (k, w) in self.weights.iter().enumerate() {
                        let s = self.decision(w, row);
                        if s > best_score {
                            best = k;
                            best_score = s;
                        }
                    }
                    self.classes[best]
                }
            })
            .collect()
    }
}

/// Pegasos with projection; returns the average iterate over the second half of training.
fn pegasos(
    rows: &[(Vec<f64>, usize)],
    targets: &[f64],
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Vec<f64> {
    let dim = rows[0].0.len();
    let mut rng = seed::rng(seed, &[]);
    let mut w = vec![0.0; dim];
    let mut avg = vec![0.0; dim];
    let mut averaged = 0usize;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let radius = 1.0 / lambda.sqrt();
    let mut t = 0usize;
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        let accumulate = epoch >= epochs / 2;
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = &rows[i].0;
            let margin = targets[i] * dot(&w, x);
            let shrink = 1.0 - eta * lambda;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            if margin < 1.0 {
                let step = eta * targets[i];
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj += step * xj;
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let f = radius / norm;
                for wj in w.iter_mut() {
                    *wj *= f;
                }
            }
            if accumulate {
                for (a, wj) in avg.iter_mut().zip(&w) {
                    *a += wj;
                }
                averaged += 1;
            }
        }
    }
    if averaged == 0 {
        return w;
    }
    avg.iter().map(|a| a / averaged as f64).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
