//! Pearson correlation, Shannon entropies and mutual information.
//!
//! All entropies are in bits. Frequency tables are accumulated in ordered
//! containers so that floating-point sums are evaluated in a fixed order and
//! results are bit-reproducible across runs.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{discretize, Dataset, DiscretizedColumn};
use crate::error::{Error, Result};

/// Population Pearson correlation of `x` and `y`.
///
/// Returns `0.0` when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument(
            "pearson needs at least 2 observations".into(),
        ));
    }
    let cx = Centered::new(x);
    let cy = Centered::new(y);
    Ok(cx.correlation(&cy))
}

/// A column shifted to zero mean, with its population variance.
struct Centered {
    deviations: Vec<f64>,
    variance: f64,
}

impl Centered {
    fn new(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let constant = values.windows(2).all(|w| w[0] == w[1]);
        let mean = values.iter().sum::<f64>() / n;
        let deviations: Vec<f64> = values.iter().map(|v| v - mean).collect();
        let variance = if constant {
            0.0
        } else {
            deviations.iter().map(|d| d * d).sum::<f64>() / n
        };
        Centered {
            deviations,
            variance,
        }
    }

    fn correlation(&self, other: &Centered) -> f64 {
        if self.variance == 0.0 || other.variance == 0.0 {
            return 0.0;
        }
        let n = self.deviations.len() as f64;
        let cov = self
            .deviations
            .iter()
            .zip(&other.deviations)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n;
        (cov / (self.variance * other.variance).sqrt()).clamp(-1.0, 1.0)
    }
}

/// Square symmetric matrix of (optionally absolute) Pearson coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    n: usize,
    values: Vec<f64>,
    absolute: bool,
}

impl CorrelationMatrix {
    /// Builds a matrix from row-major values; fails unless `values` is `n * n`
    /// long and symmetric.
    pub fn from_rows(rows: Vec<Vec<f64>>, absolute: bool) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "correlation matrix is not square: {n} rows, a row of length {}",
                bad.len()
            )));
        }
        let m = CorrelationMatrix {
            n,
            values: rows.into_iter().flatten().collect(),
            absolute,
        };
        for i in 0..n {
            for j in (i + 1)..n {
                if m.get(i, j) != m.get(j, i) {
                    return Err(Error::InvalidArgument(format!(
                        "correlation matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_absolute(&self) -> bool {
        self.absolute
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Copy with every diagonal entry set to zero.
    pub fn with_zero_diagonal(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.values[i * self.n + i] = 0.0;
        }
        out
    }

    /// Copy with every entry rounded half away from zero to `decimals` places.
    pub fn rounded(&self, decimals: u32) -> Self {
        let scale = 10f64.powi(decimals as i32);
        let mut out = self.clone();
        for v in &mut out.values {
            *v = (*v * scale).round() / scale;
        }
        out
    }
}

/// Absolute Pearson correlation between every pair of feature columns.
pub fn correlation_matrix(dataset: &Dataset) -> Result<CorrelationMatrix> {
    build_correlation(dataset, true)
}

/// Signed Pearson correlation between every pair of feature columns.
pub fn signed_correlation_matrix(dataset: &Dataset) -> Result<CorrelationMatrix> {
    build_correlation(dataset, false)
}

fn build_correlation(dataset: &Dataset, absolute: bool) -> Result<CorrelationMatrix> {
    let n = dataset.n_features();
    if dataset.n_rows() < 2 {
        return Err(Error::TooFewRows(dataset.n_rows()));
    }
    let columns: Vec<Centered> = (0..n)
        .into_par_iter()
        .map(|j| Centered::new(&dataset.column(j).to_vec()))
        .collect();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| columns[i].correlation(&columns[j]))
                .collect()
        })
        .collect();
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        values[i * n + i] = if columns[i].variance == 0.0 { 0.0 } else { 1.0 };
        for (k, &r) in row.iter().enumerate() {
            let j = i + 1 + k;
            let r = if absolute { r.abs() } else { r };
            values[i * n + j] = r;
            values[j * n + i] = r;
        }
    }
    Ok(CorrelationMatrix {
        n,
        values,
        absolute,
    })
}

fn entropy_of_counts(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    let total = total as f64;
    let h: f64 = counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Shannon entropy (bits) of the empirical distribution of `labels`.
pub fn entropy<T: Ord>(labels: &[T]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    let mut counts: BTreeMap<&T, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    Ok(entropy_of_counts(counts.into_values(), labels.len()))
}

/// Entropy (bits) of the empirical joint distribution of `(a[i], b[i])` pairs.
pub fn joint_entropy<A: Ord, B: Ord>(a: &[A], b: &[B]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    let mut counts: BTreeMap<(&A, &B), usize> = BTreeMap::new();
    for pair in a.iter().zip(b) {
        *counts.entry(pair).or_default() += 1;
    }
    Ok(entropy_of_counts(counts.into_values(), a.len()))
}

/// `H(a) + H(b) - H(a, b)` over two categorical sequences, clamped at zero.
pub fn discrete_mutual_information<A: Ord, B: Ord>(a: &[A], b: &[B]) -> Result<f64> {
    let joint = joint_entropy(a, b)?;
    Ok((entropy(a)? + entropy(b)? - joint).max(0.0))
}

/// Mutual information (bits) between a binned feature and class labels.
pub fn mutual_information(feature: &DiscretizedColumn, labels: &[usize]) -> Result<f64> {
    let bins = &feature.bin_indices;
    if bins.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: bins.len(),
            right: labels.len(),
        });
    }
    if bins.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    // dense contingency table: bins are < bin_count by construction
    let n_bins = feature.bin_count.max(bins.iter().max().map_or(0, |b| b + 1));
    let n_classes = labels.iter().max().map_or(0, |c| c + 1);
    let mut table = vec![0usize; n_bins * n_classes];
    let mut bin_totals = vec![0usize; n_bins];
    let mut class_totals = vec![0usize; n_classes];
    for (&b, &c) in bins.iter().zip(labels) {
        table[b * n_classes + c] += 1;
        bin_totals[b] += 1;
        class_totals[c] += 1;
    }
    let m = labels.len();
    let h_class = entropy_of_counts(class_totals.into_iter(), m);
    let h_feature = entropy_of_counts(bin_totals.into_iter(), m);
    let h_joint = entropy_of_counts(table.into_iter(), m);
    Ok((h_class + h_feature - h_joint).max(0.0))
}

/// Per-feature mutual information with the class label, in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutualInformationVector {
    pub values: Vec<f64>,
    pub bin_count: usize,
}

/// Discretizes each feature into `bin_count` equal-width bins and measures its
/// mutual information with the labels.
pub fn mi_classif(dataset: &Dataset, bin_count: usize) -> Result<MutualInformationVector> {
    let values = (0..dataset.n_features())
        .into_par_iter()
        .map(|j| {
            let col = discretize(&dataset.column(j).to_vec(), bin_count)?;
            mutual_information(&col, &dataset.labels)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MutualInformationVector { values, bin_count })
}
