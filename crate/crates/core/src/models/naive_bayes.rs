//! Gaussian naive Bayes.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::distinct_classes;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    /// Added to every variance, as a fraction of the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams {
            var_smoothing: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb {
    classes: Vec<usize>,
    log_prior: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

fn mean_var(values: &mut [f64]) -> (f64, f64) {
    // sorted summation keeps the result independent of row order
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    (mu, var)
}

impl GaussianNb {
    pub(crate) fn fit(params: &NaiveBayesParams, x: ArrayView2<'_, f64>, y: &[usize]) -> Self {
        let (m, d) = x.dim();
        let classes = distinct_classes(y);

        let max_var = (0..d)
            .map(|j| mean_var(&mut x.column(j).to_vec()).1)
            .fold(0.0, f64::max);
        let epsilon = if max_var > 0.0 {
            params.var_smoothing * max_var
        } else {
            params.var_smoothing.max(f64::MIN_POSITIVE)
        };

        let mut log_prior = Vec::with_capacity(classes.len());
        let mut means = Vec::with_capacity(classes.len());
        let mut variances = Vec::with_capacity(classes.len());
        for &c in &classes {
            let rows: Vec<usize> = (0..m).filter(|&i| y[i] == c).collect();
            log_prior.push((rows.len() as f64 / m as f64).ln());
            let (mu, var): (Vec<f64>, Vec<f64>) = (0..d)
                .map(|j| {
                    let mut col: Vec<f64> = rows.iter().map(|&i| x[[i, j]]).collect();
                    let (mu, var) = mean_var(&mut col);
                    (mu, var + epsilon)
                })
                .unzip();
            means.push(mu);
            variances.push(var);
        }

        GaussianNb {
            classes,
            log_prior,
            means,
            variances,
        }
    }

    pub fn n_features(&self) -> usize {
        self.means[0].len()
    }

    pub(crate) fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        let two_pi = 2.0 * std::f64::consts::PI;
        x.rows()
            .into_iter()
            .map(|row| {
                let mut best = 0;
                let mut best_ll = f64::NEG_INFINITY;
                for k in 0..self.classes.len() {
                    let mut ll = self.log_prior[k];
                    for (j, &v) in row.iter().enumerate() {
                        let var = self.variances[k][j];
                        let diff = v - self.means[k][j];
                        ll -= 0.5 * ((two_pi * var).ln() + diff * diff / var);
                    }
                    if ll > best_ll {
                        best = k;
                        best_ll = ll;
                    }
                }
                self.classes[best]
            })
            .collect()
    }
}
