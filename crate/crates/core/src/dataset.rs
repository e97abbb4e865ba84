//! Tabular dataset ingestion and equal-width discretization.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of equal-width bins used when estimating mutual information.
pub const DEFAULT_BINS: usize = 10;

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassColumn {
    #[default]
    Last,
    Name(String),
    Index(usize),
}

impl ClassColumn {
    fn resolve(&self, headers: &[String]) -> Result<usize> {
        match self {
            ClassColumn::Last => headers
                .len()
                .checked_sub(1)
                .ok_or(Error::EmptyInput("header row")),
            ClassColumn::Index(i) if *i < headers.len() => Ok(*i),
            ClassColumn::Index(i) => Err(Error::ClassColumnNotFound(i.to_string())),
            ClassColumn::Name(name) => {
                if let Some(pos) = headers.iter().position(|h| h == name) {
                    return Ok(pos);
                }
                // a bare integer that is not itself a header name selects by position
                match name.parse::<usize>() {
                    Ok(i) if i < headers.len() => Ok(i),
                    _ => Err(Error::ClassColumnNotFound(name.clone())),
                }
            }
        }
    }
}

impl FromStr for ClassColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidArgument("empty class column".into()));
        }
        if s.eq_ignore_ascii_case("last") {
            return Ok(ClassColumn::Last);
        }
        Ok(ClassColumn::Name(s.to_string()))
    }
}

impl fmt::Display for ClassColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassColumn::Last => f.write_str("last"),
            ClassColumn::Name(n) => f.write_str(n),
            ClassColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub class_column: ClassColumn,
    /// Drop rows with a missing cell instead of failing.
    pub drop_missing: bool,
    /// Cell text treated as missing in addition to the empty string.
    pub missing_sentinel: String,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            class_column: ClassColumn::Last,
            drop_missing: true,
            missing_sentinel: "?".to_string(),
        }
    }
}

/// A numeric feature matrix with categorical class labels.
///
/// Labels are stored as indices into `classes`. Class names are ordered
/// numerically when every name parses as a number, lexicographically
/// otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    /// m rows by n columns.
    pub samples: Array2<f64>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
    /// Rows removed during ingestion because of missing cells.
    pub dropped_rows: usize,
}

impl Dataset {
    /// Builds a dataset from string labels, validating every invariant.
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        samples: Array2<f64>,
        labels: &[impl AsRef<str>],
    ) -> Result<Self> {
        let classes = ordered_classes(labels.iter().map(|l| l.as_ref()));
        let index: BTreeMap<&str, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let labels = labels.iter().map(|l| index[l.as_ref()]).collect();
        Self::from_parts(name, feature_names, samples, labels, classes)
    }

    /// Builds a dataset from pre-encoded labels.
    pub fn from_parts(
        name: impl Into<String>,
        feature_names: Vec<String>,
        samples: Array2<f64>,
        labels: Vec<usize>,
        classes: Vec<String>,
    ) -> Result<Self> {
        let (m, n) = samples.dim();
        if feature_names.len() != n {
            return Err(Error::LengthMismatch {
                left: feature_names.len(),
                right: n,
            });
        }
        if labels.len() != m {
            return Err(Error::LengthMismatch {
                left: labels.len(),
                right: m,
            });
        }
        if n < 2 {
            return Err(Error::TooFewFeatures(n));
        }
        if m < 2 {
            return Err(Error::TooFewRows(m));
        }
        let mut seen = HashSet::new();
        for f in &feature_names {
            if !seen.insert(f.as_str()) {
                return Err(Error::DuplicateFeature(f.clone()));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(Error::InvalidArgument(format!(
                "label index {bad} out of range for {} classes",
                classes.len()
            )));
        }
        let distinct: HashSet<usize> = labels.iter().copied().collect();
        if distinct.len() < 2 {
            return Err(Error::TooFewClasses(distinct.len()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample value".into()));
        }
        Ok(Dataset {
            name: name.into(),
            feature_names,
            samples,
            labels,
            classes,
            dropped_rows: 0,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.samples.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.samples.column(j)
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    /// Per-class row counts, indexed like `classes`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Copy of the dataset restricted to the given feature columns, in the given order.
    pub fn select_features(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            feature_names: indices
                .iter()
                .map(|&i| self.feature_names[i].clone())
                .collect(),
            samples: self.samples.select(Axis(1), indices),
            labels: self.labels.clone(),
            classes: self.classes.clone(),
            dropped_rows: self.dropped_rows,
        }
    }
}

fn ordered_classes<'a>(labels: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut classes: Vec<String> = labels
        .collect::<HashSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let numeric: Option<Vec<f64>> = classes.iter().map(|c| c.parse::<f64>().ok()).collect();
    match numeric {
        Some(_) => classes.sort_by(|a, b| {
            let (x, y) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
            x.total_cmp(&y).then_with(|| a.cmp(b))
        }),
        None => classes.sort(),
    }
    classes
}

/// Loads a comma-delimited file with a header row.
pub fn load_csv(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let bytes = std::fs::read(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_csv(&bytes, &name, opts)
}

/// Parses CSV bytes; see [`load_csv`].
pub fn parse_csv(bytes: &[u8], name: &str, opts: &LoadOptions) -> Result<Dataset> {
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::EmptyInput("csv body"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(e, &[]))?
        .iter()
        .map(str::to_string)
        .collect();
    let class_idx = opts.class_column.resolve(&headers)?;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != class_idx).collect();
    if feature_cols.len() < 2 {
        return Err(Error::TooFewFeatures(feature_cols.len()));
    }

    let is_missing = |cell: &str| cell.is_empty() || cell == opts.missing_sentinel;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0;
    let mut row_buf = Vec::with_capacity(feature_cols.len());

    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| csv_error(e, &headers))?;
        row_buf.clear();
        let mut missing_at = None;
        for &c in &feature_cols {
            let cell = record.get(c).unwrap_or("");
            if is_missing(cell) {
                missing_at.get_or_insert(c);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row_buf.push(v),
                _ => {
                    return Err(Error::Parse {
                        row,
                        column: headers[c].clone(),
                        message: format!("non-numeric value '{cell}'"),
                    })
                }
            }
        }
        let class = record.get(class_idx).unwrap_or("");
        if is_missing(class) {
            missing_at.get_or_insert(class_idx);
        }
        if let Some(c) = missing_at {
            if opts.drop_missing {
                dropped += 1;
                continue;
            }
            return Err(Error::Parse {
                row,
                column: headers[c].clone(),
                message: "missing value".into(),
            });
        }
        values.extend_from_slice(&row_buf);
        labels.push(class.to_string());
    }

    let m = labels.len();
    if m < 2 {
        return Err(Error::TooFewRows(m));
    }
    let samples = Array2::from_shape_vec((m, feature_cols.len()), values)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let feature_names = feature_cols.iter().map(|&c| headers[c].clone()).collect();
    let mut ds = Dataset::new(name, feature_names, samples, &labels)?;
    ds.dropped_rows = dropped;
    Ok(ds)
}

fn csv_error(e: csv::Error, headers: &[String]) -> Error {
    let row = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(1);
    let column = match e.kind() {
        csv::ErrorKind::UnequalLengths { len, .. } => headers
            .get(*len as usize)
            .cloned()
            .unwrap_or_else(|| format!("#{len}")),
        _ => String::new(),
    };
    Error::Parse {
        row,
        column,
        message: e.to_string(),
    }
}

/// Equal-width binning of a real-valued column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedColumn {
    pub bin_indices: Vec<usize>,
    pub bin_count: usize,
    /// `bin_count + 1` edges; for a constant column both edges equal the value.
    pub bin_edges: Vec<f64>,
}

/// Splits `[min, max]` into `bins` equal-width intervals. The maximum lands in
/// the last bin; a constant column collapses to a single bin.
pub fn discretize(column: &[f64], bins: usize) -> Result<DiscretizedColumn> {
    if column.is_empty() {
        return Err(Error::EmptyInput("column"));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bin count must be at least 1".into()));
    }
    let (lo, hi) = column
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in column".into()));
    }
    if hi == lo {
        return Ok(DiscretizedColumn {
            bin_indices: vec![0; column.len()],
            bin_count: 1,
            bin_edges: vec![lo, hi],
        });
    }
    let span = hi - lo;
    let b = bins as f64;
    let bin_indices = column
        .iter()
        .map(|&v| (((v - lo) / span * b).floor() as usize).min(bins - 1))
        .collect();
    let mut bin_edges: Vec<f64> = (0..=bins).map(|k| lo + span * k as f64 / b).collect();
    bin_edges[bins] = hi;
    Ok(DiscretizedColumn {
        bin_indices,
        bin_count: bins,
        bin_edges,
    })
}
