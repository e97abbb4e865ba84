//! Command-line interface: `score`, `graph`, `evaluate`, `compare` and `serve`.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::baselines::Method;
use crate::dataset::{load_csv, ClassColumn, LoadOptions, DEFAULT_BINS};
use crate::error::Error;
use crate::fam::{build_fam_graph, export_graph, FamOptions, GraphFormat, Thresholds};
use crate::harness::{
    render_report, run_experiment_on_files, ExperimentConfig, ReportFormat, DEFAULT_FOLDS,
    DEFAULT_ITERATIONS, FULL_ITERATIONS,
};
use crate::models::{ClassifierKind, ClassifierSpec};
use crate::scoring::{famex_with_graph, FamexConfig};
use crate::seed::DEFAULT_SEED;
use crate::server::{self, ServerConfig};

#[derive(Parser, Debug)]
#[command(name = "famex", version, about = "Feature importance from feature association maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print FAMeX scores for every feature.
    Score(ScoreArgs),
    /// Export the feature association map as DOT or JSON.
    Graph(GraphArgs),
    /// Top/bottom subset evaluation for one importance method.
    Evaluate(EvaluateArgs),
    /// Top/bottom subset evaluation for every importance method.
    Compare(CompareArgs),
    /// Serve the HTTP API (and static UI assets, if given).
    Serve(ServeArgs),
}

/// Number of decimals, or `none`.
#[derive(Debug, Clone, Copy)]
struct Decimals(Option<u32>);

impl FromStr for Decimals {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("none") {
            return Ok(Decimals(None));
        }
        s.parse::<u32>()
            .map(|d| Decimals(Some(d)))
            .map_err(|_| format!("expected a number of decimals or 'none', got '{s}'"))
    }
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Class column: header name, 0-based index, or `last`.
    #[arg(long = "class-col", default_value = "last")]
    class_col: ClassColumn,
}

impl DataArgs {
    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            class_column: self.class_col.clone(),
            ..LoadOptions::default()
        }
    }
}

#[derive(Args, Debug)]
struct FamArgs {
    /// Equal-width bins used to discretize features for mutual information.
    #[arg(long, default_value_t = DEFAULT_BINS, value_parser = clap::value_parser!(usize))]
    bins: usize,
    /// Grading thresholds as `low,high`.
    #[arg(long, default_value = "0.67,0.9")]
    thresholds: Thresholds,
    /// Round |r| to this many decimals before grading (`none` to compare raw values).
    #[arg(long = "corr-decimals", default_value = "2")]
    corr_decimals: Decimals,
}

impl FamArgs {
    fn config(&self) -> std::result::Result<FamexConfig, String> {
        if self.bins == 0 {
            return Err("--bins must be at least 1".into());
        }
        Ok(FamexConfig {
            bins: self.bins,
            fam: FamOptions {
                thresholds: self.thresholds,
                correlation_decimals: self.corr_decimals.0,
            },
        })
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write output to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    dataset: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    fam: FamArgs,
    /// table, json or markdown.
    #[arg(long, default_value = "table")]
    format: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct GraphArgs {
    dataset: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    fam: FamArgs,
    /// dot or json.
    #[arg(long, default_value = "dot")]
    format: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct HarnessArgs {
    #[arg(required = true)]
    datasets: Vec<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    fam: FamArgs,
    /// Fraction of top-ranked features to keep.
    #[arg(long, default_value_t = 0.3)]
    top: f64,
    /// Fraction of bottom-ranked features to keep.
    #[arg(long, default_value_t = 0.3)]
    bottom: f64,
    /// Comma-separated classifiers: svm, decision_tree, random_forest, naive_bayes.
    #[arg(long, value_delimiter = ',', default_value = "svm,decision_tree,random_forest,naive_bayes")]
    classifiers: Vec<ClassifierKind>,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Cross-validation repetitions per cell.
    #[arg(long, default_value_t = DEFAULT_ITERATIONS, conflicts_with = "full")]
    iters: usize,
    /// Run the full-scale protocol (100 iterations).
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Classifier whose accuracy PFI and Shapley values explain.
    #[arg(long, default_value = "decision_tree")]
    explainer: ClassifierKind,
    /// Shuffles per feature for permutation importance.
    #[arg(long, default_value_t = crate::baselines::DEFAULT_REPEATS)]
    repeats: usize,
    /// Sampled orderings for Shapley values.
    #[arg(long, default_value_t = crate::baselines::DEFAULT_PERMUTATIONS)]
    permutations: usize,
    /// Hyperparameter override `kind:key=value`, e.g. `svm:epochs=200`. Repeatable.
    #[arg(long = "param")]
    params: Vec<String>,
    /// table, json or markdown.
    #[arg(long, default_value = "table")]
    format: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// famex, pfi or shapley_mc.
    #[arg(long, default_value = "famex")]
    method: Method,
    #[command(flatten)]
    harness: HarnessArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    harness: HarnessArgs,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Directory of static UI assets served under `/`.
    #[arg(long = "static-dir")]
    static_dir: Option<PathBuf>,
    /// Largest accepted upload, in bytes.
    #[arg(long = "max-upload", default_value_t = server::DEFAULT_MAX_UPLOAD)]
    max_upload: usize,
}

fn split_param(p: &str) -> std::result::Result<(ClassifierKind, String, String), String> {
    let (kind, rest) = p
        .split_once(':')
        .ok_or_else(|| format!("--param '{p}' must look like kind:key=value"))?;
    let (key, value) = rest
        .split_once('=')
        .ok_or_else(|| format!("--param '{p}' must look like kind:key=value"))?;
    let kind = kind.parse::<ClassifierKind>().map_err(|e| e.to_string())?;
    Ok((kind, key.trim().to_string(), value.trim().to_string()))
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl HarnessArgs {
    fn config(&self, methods: Vec<Method>) -> std::result::Result<ExperimentConfig, Failure> {
        let famex = self.fam.config().map_err(Failure::Usage)?;
        let mut classifiers: Vec<ClassifierSpec> = Vec::new();
        for &kind in &self.classifiers {
            if classifiers.iter().all(|c| c.kind() != kind) {
                classifiers.push(ClassifierSpec::new(kind, self.seed));
            }
        }
        let mut explainer = ClassifierSpec::new(self.explainer, self.seed);
        for p in &self.params {
            let (kind, key, value) = split_param(p).map_err(Failure::Usage)?;
            if !self.classifiers.contains(&kind) && kind != self.explainer {
                return Err(Failure::Usage(format!(
                    "--param '{p}' targets {} which is neither evaluated nor the explainer",
                    kind.as_str()
                )));
            }
            for spec in classifiers.iter_mut().chain(std::iter::once(&mut explainer)) {
                if spec.kind() == kind {
                    spec.set(&key, &value).map_err(|e| Failure::Usage(e.to_string()))?;
                }
            }
        }
        let config = ExperimentConfig {
            methods,
            classifiers,
            top_fraction: self.top,
            bottom_fraction: self.bottom,
            folds: self.folds,
            iterations: if self.full { FULL_ITERATIONS } else { self.iters },
            seed: self.seed,
            famex,
            explainer,
            repeats: self.repeats,
            permutations: self.permutations,
            ..ExperimentConfig::default()
        };
        config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(config)
    }

    fn run(&self, methods: Vec<Method>, out: &mut dyn Write) -> std::result::Result<(), Failure> {
        let format: ReportFormat = self.format.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
        let config = self.config(methods)?;
        let report = run_experiment_on_files(&self.datasets, &self.data.load_options(), &config)?;
        emit(&render_report(&report, format)?, &self.output, out)
    }
}

fn emit(text: &str, output: &OutputArgs, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Data(e.into())),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::Data(e.into())),
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    match command {
        Command::Score(a) => {
            let format: ReportFormat = a.format.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let config = a.fam.config().map_err(Failure::Usage)?;
            let data = load_csv(&a.dataset, &a.data.load_options())?;
            let graph = build_fam_graph(&data, &config.fam)?;
            let scores = famex_with_graph(&data, &graph, config.bins)?;
            let text = match format {
                ReportFormat::Json => scores.to_json()?,
                ReportFormat::Table => scores.to_table(),
                ReportFormat::Markdown => scores.to_markdown(),
            };
            emit(&text, &a.output, out)
        }
        Command::Graph(a) => {
            let format: GraphFormat = a.format.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?;
            let config = a.fam.config().map_err(Failure::Usage)?;
            let data = load_csv(&a.dataset, &a.data.load_options())?;
            let graph = build_fam_graph(&data, &config.fam)?;
            emit(&export_graph(&graph, format)?, &a.output, out)
        }
        Command::Evaluate(a) => a.harness.run(vec![a.method], out),
        Command::Compare(a) => a.harness.run(Method::ALL.to_vec(), out),
        Command::Serve(a) => {
            let config = ServerConfig {
                static_dir: a.static_dir,
                max_upload_bytes: a.max_upload,
                ..ServerConfig::default()
            };
            let addr = SocketAddr::new(a.host, a.port);
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Data(e.into()))?;
            runtime.block_on(server::serve(addr, config))?;
            Ok(())
        }
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code:
/// 0 on success, 1 for data errors, 2 for usage errors.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                2
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
