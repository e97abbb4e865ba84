//! Top-p% / bottom-p% evaluation: rank features with each importance method,
//! retrain every classifier on the highest- and lowest-ranked subsets under
//! repeated stratified cross-validation, and report mean ± std accuracy.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, ImportanceConfig, Method, DEFAULT_PERMUTATIONS, DEFAULT_REPEATS};
use crate::dataset::{load_csv, Dataset, LoadOptions};
use crate::error::{Error, Result};
use crate::models::{stratified_kfold, ClassifierKind, ClassifierSpec};
use crate::scoring::FamexConfig;
use crate::seed;

pub const DEFAULT_FRACTION: f64 = 0.3;
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_ITERATIONS: usize = 10;
pub const FULL_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Top,
    Bottom,
}

impl Subset {
    pub fn as_str(self) -> &'static str {
        match self {
            Subset::Top => "top",
            Subset::Bottom => "bottom",
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Number of features in a `fraction` subset of `n`: the ceiling of
/// `fraction * n`, ignoring floating-point noise just above an integer.
pub fn subset_size(n: usize, fraction: f64) -> usize {
    let p = fraction * n as f64;
    let k = if (p - p.round()).abs() < 1e-9 { p.round() } else { p.ceil() };
    (k as usize).clamp(1, n.max(1))
}

/// First (`Top`) or last (`Bottom`) `⌈fraction·n⌉` names of `ranking`.
pub fn select_subset(ranking: &[String], fraction: f64, end: Subset) -> Result<Vec<String>> {
    if ranking.is_empty() {
        return Err(Error::EmptyInput("ranking"));
    }
    check_fraction(fraction)?;
    let k = subset_size(ranking.len(), fraction);
    Ok(match end {
        Subset::Top => ranking[..k].to_vec(),
        Subset::Bottom => ranking[ranking.len() - k..].to_vec(),
    })
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("fraction must be in (0, 1], got {fraction}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub classifiers: Vec<ClassifierSpec>,
    pub subsets: Vec<Subset>,
    pub top_fraction: f64,
    pub bottom_fraction: f64,
    pub folds: usize,
    pub iterations: usize,
    pub seed: u64,
    pub famex: FamexConfig,
    /// Classifier PFI and Shapley explain; rankings are computed once per dataset.
    pub explainer: ClassifierSpec,
    pub repeats: usize,
    pub permutations: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            methods: vec![Method::Famex],
            classifiers: ClassifierKind::ALL
                .iter()
                .map(|&k| ClassifierSpec::new(k, seed::DEFAULT_SEED))
                .collect(),
            subsets: vec![Subset::Top, Subset::Bottom],
            top_fraction: DEFAULT_FRACTION,
            bottom_fraction: DEFAULT_FRACTION,
            folds: DEFAULT_FOLDS,
            iterations: DEFAULT_ITERATIONS,
            seed: seed::DEFAULT_SEED,
            famex: FamexConfig::default(),
            explainer: ClassifierSpec::new(ClassifierKind::DecisionTree, seed::DEFAULT_SEED),
            repeats: DEFAULT_REPEATS,
            permutations: DEFAULT_PERMUTATIONS,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.methods.is_empty() {
            return invalid("at least one method is required");
        }
        if self.classifiers.is_empty() {
            return invalid("at least one classifier is required");
        }
        if self.subsets.is_empty() {
            return invalid("at least one of top/bottom is required");
        }
        let kinds: std::collections::BTreeSet<ClassifierKind> = self.classifiers.iter().map(|c| c.kind()).collect();
        let methods: std::collections::BTreeSet<Method> = self.methods.iter().copied().collect();
        let subsets: std::collections::BTreeSet<Subset> = self.subsets.iter().copied().collect();
        if kinds.len() != self.classifiers.len()
            || methods.len() != self.methods.len()
            || subsets.len() != self.subsets.len()
        {
            return invalid("methods, classifiers and subsets must not repeat");
        }
        check_fraction(self.top_fraction)?;
        check_fraction(self.bottom_fraction)?;
        if self.folds < 2 {
            return invalid("folds must be at least 2");
        }
        if self.iterations == 0 {
            return invalid("iterations must be at least 1");
        }
        if self.famex.bins == 0 {
            return invalid("bins must be at least 1");
        }
        if self.repeats == 0 || self.permutations == 0 {
            return invalid("repeats and permutations must be at least 1");
        }
        self.famex.fam.thresholds.validate()
    }

    fn fraction(&self, subset: Subset) -> f64 {
        match subset {
            Subset::Top => self.top_fraction,
            Subset::Bottom => self.bottom_fraction,
        }
    }

    fn importance_config(&self) -> ImportanceConfig {
        ImportanceConfig {
            famex: self.famex,
            explainer: self.explainer.clone(),
            repeats: self.repeats,
            permutations: self.permutations,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dataset: String,
    pub method: Method,
    pub classifier: ClassifierKind,
    pub subset: Subset,
    /// Mean over iterations of the per-iteration mean fold accuracy, in [0, 1].
    pub mean: f64,
    /// Population standard deviation of the per-iteration means.
    pub std: f64,
    pub features: Vec<String>,
    pub iteration_means: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Average {
    pub method: Method,
    pub classifier: ClassifierKind,
    pub subset: Subset,
    /// Arithmetic mean of the matching cells' means across datasets.
    pub mean: f64,
    pub datasets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub datasets: Vec<String>,
    pub cells: Vec<Cell>,
    pub averages: Vec<Average>,
    pub config: ExperimentConfig,
}

impl EvaluationReport {
    pub fn cell(
        &self,
        dataset: &str,
        method: Method,
        classifier: ClassifierKind,
        subset: Subset,
    ) -> Option<&Cell> {
        self.cells.iter().find(|c| {
            c.dataset == dataset && c.method == method && c.classifier == classifier && c.subset == subset
        })
    }

    pub fn average(&self, method: Method, classifier: ClassifierKind, subset: Subset) -> Option<&Average> {
        self.averages
            .iter()
            .find(|a| a.method == method && a.classifier == classifier && a.subset == subset)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Progress of a running experiment, counted in cross-validation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Progress {
    pub completed: usize,
    pub total: usize,
}

/// Loads every CSV and runs the experiment.
pub fn run_experiment_on_files<P: AsRef<Path>>(
    paths: &[P],
    load: &LoadOptions,
    config: &ExperimentConfig,
) -> Result<EvaluationReport> {
    config.validate()?;
    let datasets = paths
        .iter()
        .map(|p| load_csv(p, load))
        .collect::<Result<Vec<_>>>()?;
    run_experiment(&datasets, config)
}

pub fn run_experiment(datasets: &[Dataset], config: &ExperimentConfig) -> Result<EvaluationReport> {
    run_experiment_with_progress(datasets, config, |_| {})
}

/// Runs the experiment, calling `progress` after every finished cross-validation run.
pub fn run_experiment_with_progress<F>(
    datasets: &[Dataset],
    config: &ExperimentConfig,
    progress: F,
) -> Result<EvaluationReport>
where
    F: Fn(Progress) + Sync,
{
    config.validate()?;
    if datasets.is_empty() {
        return Err(Error::EmptyInput("datasets"));
    }
    let importance = config.importance_config();

    let pairs: Vec<(usize, Method)> = (0..datasets.len())
        .flat_map(|d| config.methods.iter().map(move |&m| (d, m)))
        .collect();
    let rankings = first_error(
        pairs
            .par_iter()
            .map(|&(d, m)| {
                baselines::importance(&datasets[d], m, &importance)
                    .map(|v| v.ranked_names())
                    .map_err(|e| Error::Cell {
                        coordinate: format!("dataset={}, method={m}", datasets[d].name),
                        source: Box::new(e),
                    })
            })
            .collect(),
    )?;

    struct Job<'a> {
        dataset: &'a Dataset,
        method: Method,
        classifier: &'a ClassifierSpec,
        subset: Subset,
        features: Vec<String>,
    }
    let mut jobs = Vec::new();
    for (p, &(d, method)) in pairs.iter().enumerate() {
        for classifier in &config.classifiers {
            for &subset in &config.subsets {
                jobs.push(Job {
                    dataset: &datasets[d],
                    method,
                    classifier,
                    subset,
                    features: select_subset(&rankings[p], config.fraction(subset), subset)?,
                });
            }
        }
    }

    let total = jobs.len() * config.iterations;
    let completed = AtomicUsize::new(0);
    let cells = first_error(
        jobs.par_iter()
            .map(|job| {
                let coordinate = || {
                    format!(
                        "dataset={}, method={}, classifier={}, subset={}",
                        job.dataset.name,
                        job.method,
                        job.classifier.kind().as_str(),
                        job.subset
                    )
                };
                let indices: Vec<usize> = job
                    .features
                    .iter()
                    .map(|f| job.dataset.feature_index(f).expect("ranked name is a feature"))
                    .collect();
                let x = job.dataset.samples.select(ndarray::Axis(1), &indices);
                let iteration_means = (0..config.iterations)
                    .map(|it| {
                        // fold shuffles depend only on dataset and iteration, so
                        // every method, classifier and subset sees the same splits
                        let cv_seed = seed::derive(config.seed, &[seed::tag(&job.dataset.name), it as u64]);
                        let r = stratified_kfold(x.view(), &job.dataset.labels, config.folds, job.classifier, cv_seed);
                        let done = completed.fetch_add(1, Ordering::Relaxed) + 1;
                        progress(Progress { completed: done, total });
                        r.map(|r| r.mean)
                    })
                    .collect::<Result<Vec<f64>>>()
                    .map_err(|e| Error::Cell {
                        coordinate: coordinate(),
                        source: Box::new(e),
                    })?;
                let (mean, std) = mean_std(&iteration_means);
                Ok(Cell {
                    dataset: job.dataset.name.clone(),
                    method: job.method,
                    classifier: job.classifier.kind(),
                    subset: job.subset,
                    mean,
                    std,
                    features: job.features.clone(),
                    iteration_means,
                })
            })
            .collect(),
    )?;

    let mut averages = Vec::new();
    for &method in &config.methods {
        for classifier in &config.classifiers {
            for &subset in &config.subsets {
                let matching: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.method == method && c.classifier == classifier.kind() && c.subset == subset)
                    .map(|c| c.mean)
                    .collect();
                averages.push(Average {
                    method,
                    classifier: classifier.kind(),
                    subset,
                    mean: matching.iter().sum::<f64>() / matching.len() as f64,
                    datasets: matching.len(),
                });
            }
        }
    }

    Ok(EvaluationReport {
        datasets: datasets.iter().map(|d| d.name.clone()).collect(),
        cells,
        averages,
        config: config.clone(),
    })
}

fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

fn percent(mean: f64, std: f64) -> String {
    format!("{:.2} ± {:.2}", mean * 100.0, std * 100.0)
}

/// Rows of one classifier section: a header, one row per dataset, and an
/// `Average` row when more than one dataset was evaluated.
fn section_rows(report: &EvaluationReport, classifier: ClassifierKind) -> Vec<Vec<String>> {
    let config = &report.config;
    let mut header = vec!["Dataset".to_string()];
    for m in &config.methods {
        for s in &config.subsets {
            header.push(format!("{m} {s}"));
        }
    }
    let mut rows = vec![header];
    for d in &report.datasets {
        let mut row = vec![d.clone()];
        for &m in &config.methods {
            for &s in &config.subsets {
                row.push(
                    report
                        .cell(d, m, classifier, s)
                        .map_or_else(|| "-".into(), |c| percent(c.mean, c.std)),
                );
            }
        }
        rows.push(row);
    }
    if report.datasets.len() > 1 {
        let mut row = vec!["Average".to_string()];
        for &m in &config.methods {
            for &s in &config.subsets {
                row.push(
                    report
                        .average(m, classifier, s)
                        .map_or_else(|| "-".into(), |a| format!("{:.2}", a.mean * 100.0)),
                );
            }
        }
        rows.push(row);
    }
    rows
}

fn classifiers_in(report: &EvaluationReport) -> Vec<ClassifierKind> {
    let mut kinds: Vec<ClassifierKind> = Vec::new();
    for c in &report.config.classifiers {
        if !kinds.contains(&c.kind()) {
            kinds.push(c.kind());
        }
    }
    kinds
}

/// Renders a report. Accuracies in text formats are percentages, `mean ± std`.
pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> Result<String> {
    let mut out = String::new();
    match format {
        ReportFormat::Json => {
            out = serde_json::to_string_pretty(report)?;
            out.push('\n');
        }
        ReportFormat::Table => {
            for (i, kind) in classifiers_in(report).into_iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "Classifier: {}", kind.as_str());
                let rows = section_rows(report, kind);
                let widths: Vec<usize> = (0..rows[0].len())
                    .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
                    .collect();
                for (r, row) in rows.iter().enumerate() {
                    let line: Vec<String> = row
                        .iter()
                        .zip(&widths)
                        .enumerate()
                        .map(|(j, (cell, &w))| {
                            if j == 0 {
                                format!("{cell:<w$}")
                            } else {
                                format!("{cell:>w$}")
                            }
                        })
                        .collect();
                    let _ = writeln!(out, "{}", line.join("  ").trim_end());
                    if r == 0 {
                        let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
                    }
                }
            }
        }
        ReportFormat::Markdown => {
            for (i, kind) in classifiers_in(report).into_iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "### {}\n", kind.as_str());
                let rows = section_rows(report, kind);
                for (r, row) in rows.iter().enumerate() {
                    let _ = writeln!(out, "| {} |", row.join(" | "));
                    if r == 0 {
                        let seps: Vec<&str> = (0..row.len()).map(|j| if j == 0 { "---" } else { "---:" }).collect();
                        let _ = writeln!(out, "| {} |", seps.join(" | "));
                    }
                }
            }
        }
    }
    Ok(out)
}
