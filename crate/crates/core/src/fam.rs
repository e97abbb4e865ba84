//! The feature association map: a thresholded correlation graph whose
//! vertices carry a redundancy grade.
//!
//! A feature's grade is decided by how many other features it correlates
//! with, and how strongly:
//!
//! | grade | condition                                             | color  |
//! |-------|-------------------------------------------------------|--------|
//! | 3     | `|r| >= high` with any feature, or `|r| >= low` with 3+ | red    |
//! | 1     | `|r| < low` with every feature                        | green  |
//! | 2     | otherwise                                             | yellow |
//!
//! The grade-3 test is applied first.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::{correlation_matrix, CorrelationMatrix};

pub const DEFAULT_LOW_THRESHOLD: f64 = 0.67;
pub const DEFAULT_HIGH_THRESHOLD: f64 = 0.9;
/// Correlations are compared against the thresholds at this many decimals.
pub const DEFAULT_CORRELATION_DECIMALS: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            low: DEFAULT_LOW_THRESHOLD,
            high: DEFAULT_HIGH_THRESHOLD,
        }
    }
}

impl Thresholds {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        let t = Thresholds { low, high };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.low)
            && (0.0..=1.0).contains(&self.high)
            && self.low <= self.high;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "thresholds must satisfy 0 <= low <= high <= 1, got {},{}",
                self.low, self.high
            )))
        }
    }
}

impl FromStr for Thresholds {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected '<low>,<high>', got '{s}'"));
        let (low, high) = s.split_once(',').ok_or_else(bad)?;
        let low = low.trim().parse().map_err(|_| bad())?;
        let high = high.trim().parse().map_err(|_| bad())?;
        Thresholds::new(low, high)
    }
}

impl fmt::Display for Thresholds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.low, self.high)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Grade {
    Low = 1,
    Moderate = 2,
    High = 3,
}

impl Grade {
    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn color(self) -> Color {
        match self {
            Grade::Low => Color::Green,
            Grade::Moderate => Color::Yellow,
            Grade::High => Color::Red,
        }
    }
}

impl TryFrom<u8> for Grade {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Grade::Low),
            2 => Ok(Grade::Moderate),
            3 => Ok(Grade::High),
            other => Err(Error::InvalidArgument(format!(
                "grade must be 1, 2 or 3, got {other}"
            ))),
        }
    }
}

impl From<Grade> for u8 {
    fn from(g: Grade) -> u8 {
        g.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Green,
    Yellow,
    Red,
}

impl Color {
    pub fn as_str(self) -> &'static str {
        match self {
            Color::Green => "green",
            Color::Yellow => "yellow",
            Color::Red => "red",
        }
    }
}

/// Grades every feature of a symmetric correlation matrix. The diagonal is ignored.
pub fn grade_features(corr: &CorrelationMatrix, thresholds: Thresholds) -> Result<Vec<Grade>> {
    thresholds.validate()?;
    let n = corr.n();
    for i in 0..n {
        for j in (i + 1)..n {
            if corr.get(i, j) != corr.get(j, i) {
                return Err(Error::InvalidArgument(format!(
                    "correlation matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok((0..n)
        .map(|i| {
            let (mut c_lo, mut c_hi) = (0, 0);
            for (j, &r) in corr.row(i).iter().enumerate() {
                if j == i {
                    continue;
                }
                let r = r.abs();
                if r >= thresholds.high {
                    c_hi += 1;
                }
                if r >= thresholds.low {
                    c_lo += 1;
                }
            }
            if c_hi >= 1 || c_lo >= 3 {
                Grade::High
            } else if c_lo == 0 {
                Grade::Low
            } else {
                Grade::Moderate
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamOptions {
    pub thresholds: Thresholds,
    /// Round |r| to this many decimals before thresholding; `None` compares raw values.
    pub correlation_decimals: Option<u32>,
}

impl Default for FamOptions {
    fn default() -> Self {
        FamOptions {
            thresholds: Thresholds::default(),
            correlation_decimals: Some(DEFAULT_CORRELATION_DECIMALS),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamVertex {
    pub index: usize,
    pub name: String,
    pub grade: Grade,
    pub color: Color,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamEdge {
    pub source: usize,
    pub target: usize,
    /// The |r| value that was compared against the low threshold.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamGraph {
    #[serde(rename = "features")]
    pub vertices: Vec<FamVertex>,
    pub edges: Vec<FamEdge>,
    pub thresholds: Thresholds,
}

impl FamGraph {
    /// Assembles a graph from a graded correlation matrix.
    pub fn from_matrix(
        names: &[String],
        corr: &CorrelationMatrix,
        thresholds: Thresholds,
    ) -> Result<Self> {
        if names.len() != corr.n() {
            return Err(Error::LengthMismatch {
                left: names.len(),
                right: corr.n(),
            });
        }
        let grades = grade_features(corr, thresholds)?;
        let vertices = names
            .iter()
            .zip(&grades)
            .enumerate()
            .map(|(index, (name, &grade))| FamVertex {
                index,
                name: name.clone(),
                grade,
                color: grade.color(),
            })
            .collect();
        let n = corr.n();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = corr.get(i, j).abs();
                if w >= thresholds.low {
                    edges.push(FamEdge {
                        source: i,
                        target: j,
                        weight: w,
                    });
                }
            }
        }
        Ok(FamGraph {
            vertices,
            edges,
            thresholds,
        })
    }

    pub fn grades(&self) -> Vec<Grade> {
        self.vertices.iter().map(|v| v.grade).collect()
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e.source == vertex || e.target == vertex)
            .count()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: FamGraph = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        let n = self.vertices.len();
        for (i, v) in self.vertices.iter().enumerate() {
            if v.index != i {
                return Err(Error::InvalidArgument(format!(
                    "vertex {i} carries index {}",
                    v.index
                )));
            }
            if v.color != v.grade.color() {
                return Err(Error::InvalidArgument(format!(
                    "vertex {i} has grade {} but color {}",
                    v.grade.value(),
                    v.color.as_str()
                )));
            }
        }
        for e in &self.edges {
            if e.source >= e.target || e.target >= n {
                return Err(Error::InvalidArgument(format!(
                    "invalid edge ({}, {})",
                    e.source, e.target
                )));
            }
        }
        Ok(())
    }
}

/// Correlates every feature pair, then grades and thresholds the result.
pub fn build_fam_graph(dataset: &Dataset, opts: &FamOptions) -> Result<FamGraph> {
    let corr = fam_correlations(dataset, opts)?;
    FamGraph::from_matrix(&dataset.feature_names, &corr, opts.thresholds)
}

/// The matrix the graph is built from: absolute, zero diagonal, optionally rounded.
pub fn fam_correlations(dataset: &Dataset, opts: &FamOptions) -> Result<CorrelationMatrix> {
    let corr = correlation_matrix(dataset)?.with_zero_diagonal();
    Ok(match opts.correlation_decimals {
        Some(d) => corr.rounded(d),
        None => corr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(GraphFormat::Dot),
            "json" => Ok(GraphFormat::Json),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

pub fn export_graph(graph: &FamGraph, format: GraphFormat) -> Result<String> {
    match format {
        GraphFormat::Json => {
            let mut s = serde_json::to_string_pretty(graph)?;
            s.push('\n');
            Ok(s)
        }
        GraphFormat::Dot => Ok(to_dot(graph)),
    }
}

fn to_dot(graph: &FamGraph) -> String {
    let mut out = String::from("graph fam {\n    node [style=filled];\n");
    for v in &graph.vertices {
        let _ = writeln!(
            out,
            "    f{} [label=\"{}\", fillcolor=\"{}\", grade={}];",
            v.index,
            escape(&v.name),
            v.color.as_str(),
            v.grade.value()
        );
    }
    for e in &graph.edges {
        let _ = writeln!(
            out,
            "    f{} -- f{} [label=\"{:.3}\"];",
            e.source, e.target, e.weight
        );
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
