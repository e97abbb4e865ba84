//! Similarity, relevance and importance scores, and the end-to-end pipeline.
//!
//! ```text
//! similarity_i = grade_i^2 / mean(grades)
//! relevance_i  = mi_i / mean(mi)
//! importance_i = relevance_i / similarity_i
//! ```

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DEFAULT_BINS};
use crate::error::{Error, Result};
use crate::fam::{build_fam_graph, FamGraph, FamOptions, Grade};
use crate::stats::mi_classif;

pub fn similarity_scores(grades: &[u8]) -> Result<Vec<f64>> {
    if grades.is_empty() {
        return Err(Error::EmptyInput("grades"));
    }
    for &g in grades {
        Grade::try_from(g)?;
    }
    let mean = grades.iter().map(|&g| g as f64).sum::<f64>() / grades.len() as f64;
    Ok(grades
        .iter()
        .map(|&g| (g as f64) * (g as f64) / mean)
        .collect())
}

/// Fails with [`Error::Degenerate`] when every value is zero.
pub fn relevance_scores(mi: &[f64]) -> Result<Vec<f64>> {
    if mi.is_empty() {
        return Err(Error::EmptyInput("mutual information vector"));
    }
    if let Some(v) = mi.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "relevance must be finite and non-negative, got {v}"
        )));
    }
    let mean = mi.iter().sum::<f64>() / mi.len() as f64;
    if mean <= 0.0 {
        return Err(Error::Degenerate(
            "no feature carries information about the class".into(),
        ));
    }
    Ok(mi.iter().map(|v| v / mean).collect())
}

pub fn importance_scores(relevance: &[f64], similarity: &[f64]) -> Result<Vec<f64>> {
    if relevance.len() != similarity.len() {
        return Err(Error::LengthMismatch {
            left: relevance.len(),
            right: similarity.len(),
        });
    }
    if let Some(s) = similarity.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "similarity scores must be positive, got {s}"
        )));
    }
    Ok(relevance
        .iter()
        .zip(similarity)
        .map(|(r, s)| r / s)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamexConfig {
    pub bins: usize,
    pub fam: FamOptions,
}

impl Default for FamexConfig {
    fn default() -> Self {
        FamexConfig {
            bins: DEFAULT_BINS,
            fam: FamOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub grade: Grade,
    pub similarity_score: f64,
    /// Mutual information with the class, in bits.
    pub relevance: f64,
    pub relevance_score: f64,
    pub importance_score: f64,
}

/// Scores for every feature, in original column order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScores {
    pub features: Vec<FeatureScore>,
}

impl FeatureScores {
    pub fn importance(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.importance_score).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    /// 1-based rank of every feature, in column order.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.features.len()];
        for (r, i) in ranking(&self.importance()).into_iter().enumerate() {
            ranks[i] = r + 1;
        }
        ranks
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            #[serde(flatten)]
            score: &'a FeatureScore,
            rank: usize,
        }
        let rows: Vec<Row<'_>> = self
            .features
            .iter()
            .zip(self.ranks())
            .map(|(score, rank)| Row { score, rank })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            #[serde(flatten)]
            score: FeatureScore,
            #[allow(dead_code)]
            rank: usize,
        }
        let rows: Vec<Row> = serde_json::from_str(text)?;
        Ok(FeatureScores {
            features: rows.into_iter().map(|r| r.score).collect(),
        })
    }

    /// Fixed-width table sorted by rank.
    pub fn to_table(&self) -> String {
        let width = self
            .features
            .iter()
            .map(|f| f.name.len())
            .max()
            .unwrap_or(0)
            .max("feature".len());
        let ranks = self.ranks();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4}  {:<width$}  {:>5}  {:>10}  {:>10}  {:>10}  {:>10}",
            "rank", "feature", "grade", "similarity", "mi_bits", "relevance", "importance"
        );
        for i in ranking(&self.importance()) {
            let f = &self.features[i];
            let _ = writeln!(
                out,
                "{:>4}  {:<width$}  {:>5}  {:>10.4}  {:>10.4}  {:>10.4}  {:>10.4}",
                ranks[i],
                f.name,
                f.grade.value(),
                f.similarity_score,
                f.relevance,
                f.relevance_score,
                f.importance_score
            );
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| rank | feature | grade | similarity | mi_bits | relevance | importance |\n|---:|---|---:|---:|---:|---:|---:|\n",
        );
        let ranks = self.ranks();
        for i in ranking(&self.importance()) {
            let f = &self.features[i];
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
                ranks[i],
                f.name,
                f.grade.value(),
                f.similarity_score,
                f.relevance,
                f.relevance_score,
                f.importance_score
            );
        }
        out
    }
}

/// Runs the whole pipeline: FAM grading, mutual information, and the three scores.
pub fn famex(dataset: &Dataset, config: &FamexConfig) -> Result<FeatureScores> {
    let graph = build_fam_graph(dataset, &config.fam)?;
    famex_with_graph(dataset, &graph, config.bins)
}

/// Same as [`famex`] but reuses an already built graph.
pub fn famex_with_graph(dataset: &Dataset, graph: &FamGraph, bins: usize) -> Result<FeatureScores> {
    let grades: Vec<u8> = graph.grades().into_iter().map(Grade::value).collect();
    let similarity = similarity_scores(&grades)?;
    let mi = mi_classif(dataset, bins)?;
    let relevance = relevance_scores(&mi.values)?;
    let importance = importance_scores(&relevance, &similarity)?;
    let features = graph
        .vertices
        .iter()
        .enumerate()
        .map(|(i, v)| FeatureScore {
            name: v.name.clone(),
            grade: v.grade,
            similarity_score: similarity[i],
            relevance: mi.values[i],
            relevance_score: relevance[i],
            importance_score: importance[i],
        })
        .collect();
    Ok(FeatureScores { features })
}

/// Feature indices ordered by descending score; ties keep column order.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Feature names ordered from most to least important.
pub fn rank_features(scores: &FeatureScores) -> Vec<String> {
    ranking(&scores.importance())
        .into_iter()
        .map(|i| scores.features[i].name.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn similarity_examples() {
        close(&similarity_scores(&[1, 1, 1]).unwrap(), &[1.0, 1.0, 1.0]);
        close(&similarity_scores(&[1, 2, 3]).unwrap(), &[0.5, 2.0, 4.5]);
        close(&similarity_scores(&[3, 3]).unwrap(), &[3.0, 3.0]);
        assert!(similarity_scores(&[]).is_err());
        assert!(similarity_scores(&[1, 4]).is_err());
        assert!(similarity_scores(&[0]).is_err());
    }

    #[test]
    fn relevance_examples() {
        close(&relevance_scores(&[0.2, 0.4, 0.6]).unwrap(), &[0.5, 1.0, 1.5]);
        close(&relevance_scores(&[0.5, 0.5]).unwrap(), &[1.0, 1.0]);
        close(&relevance_scores(&[0.0, 0.8]).unwrap(), &[0.0, 2.0]);
        assert!(matches!(relevance_scores(&[0.0, 0.0]), Err(Error::Degenerate(_))));
        assert!(relevance_scores(&[]).is_err());
        assert!(relevance_scores(&[-0.1, 0.2]).is_err());
    }

    #[test]
    fn importance_examples() {
        close(&importance_scores(&[1.5], &[0.5]).unwrap(), &[3.0]);
        close(&importance_scores(&[1., 1., 1.], &[1., 1., 1.]).unwrap(), &[1., 1., 1.]);
        close(
            &importance_scores(&[0.5, 2.0], &[4.5, 0.5]).unwrap(),
            &[0.5 / 4.5, 4.0],
        );
        assert!(importance_scores(&[1.0], &[1.0, 2.0]).is_err());
        assert!(importance_scores(&[1.0], &[0.0]).is_err());
    }

    fn scores_with(importance: &[f64]) -> FeatureScores {
        FeatureScores {
            features: importance
                .iter()
                .enumerate()
                .map(|(i, &v)| FeatureScore {
                    name: format!("f{}", i + 1),
                    grade: Grade::Low,
                    similarity_score: 1.0,
                    relevance: v,
                    relevance_score: v,
                    importance_score: v,
                })
                .collect(),
        }
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank_features(&scores_with(&[0.1, 0.9, 0.5])), vec!["f2", "f3", "f1"]);
        assert_eq!(rank_features(&scores_with(&[0.4; 4])), vec!["f1", "f2", "f3", "f4"]);
        assert_eq!(scores_with(&[0.1, 0.9, 0.5]).ranks(), vec![3, 1, 2]);
    }

    #[test]
    fn json_schema_and_round_trip() {
        let s = scores_with(&[0.1, 0.9]);
        let text = s.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let row = &v[1];
        for key in [
            "name",
            "grade",
            "similarity_score",
            "relevance",
            "relevance_score",
            "importance_score",
            "rank",
        ] {
            assert!(row.get(key).is_some(), "missing {key}");
        }
        assert_eq!(row["rank"], 1);
        assert_eq!(FeatureScores::from_json(&text).unwrap(), s);
    }

    #[test]
    fn table_is_sorted_by_rank() {
        let t = scores_with(&[0.1, 0.9]).to_table();
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[1].contains("f2"));
        assert!(lines[2].contains("f1"));
        assert!(scores_with(&[0.1, 0.9]).to_markdown().contains("| 1 | f2 |"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn relevance_sums_to_n(mi in prop::collection::vec(0f64..2.0, 1..20)) {
                prop_assume!(mi.iter().sum::<f64>() > 1e-6);
                let r = relevance_scores(&mi).unwrap();
                prop_assert!((r.iter().sum::<f64>() - mi.len() as f64).abs() < 1e-9);
            }

            #[test]
            fn uniform_mi_scaling_keeps_scores(
                mi in prop::collection::vec(0.01f64..2.0, 2..12),
                k in 0.01f64..100.0,
            ) {
                let grades: Vec<u8> = (0..mi.len()).map(|i| (i % 3 + 1) as u8).collect();
                let sim = similarity_scores(&grades).unwrap();
                let a = importance_scores(&relevance_scores(&mi).unwrap(), &sim).unwrap();
                let scaled: Vec<f64> = mi.iter().map(|v| v * k).collect();
                let b = importance_scores(&relevance_scores(&scaled).unwrap(), &sim).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
                }
            }

            #[test]
            fn importance_monotone_in_own_mi(
                mi in prop::collection::vec(0.01f64..2.0, 2..10),
                bump in 0f64..1.0,
                which in 0usize..10,
            ) {
                let i = which % mi.len();
                let grades: Vec<u8> = (0..mi.len()).map(|j| (j % 3 + 1) as u8).collect();
                let sim = similarity_scores(&grades).unwrap();
                let before = importance_scores(&relevance_scores(&mi).unwrap(), &sim).unwrap();
                let mut raised = mi.clone();
                raised[i] += bump;
                let after = importance_scores(&relevance_scores(&raised).unwrap(), &sim).unwrap();
                prop_assert!(after[i] >= before[i] - 1e-12);
            }
        }
    }
}
