//! Acceptance report: one PASS/FAIL line per criterion, then a non-zero exit
//! if anything failed. Run with `cargo test -p famex --test acceptance`.

mod common;

use std::time::{Duration, Instant};

use famex::baselines::{monte_carlo_shapley, CharacteristicFunction, Method};
use famex::dataset::{load_csv, Dataset};
use famex::fam::Grade;
use famex::harness::{run_experiment, ExperimentConfig, Subset};
use famex::models::{ClassifierKind, ClassifierSpec};
use famex::scoring::{famex, rank_features, FamexConfig};

const SEED: u64 = 42;

// Wisconsin: reference order of the FAMeX column, highest first.
const WISCONSIN_ORDER: [&str; 9] = [
    "Bare Nuclei",
    "Clump Thickness",
    "Mitosis",
    "Bland Chromatin",
    "Cell Shape",
    "Marginal Adhesion",
    "Epithelial Size",
    "Cell Size",
    "Normal Nucleoli",
];
const MIN_SPEARMAN: f64 = 0.7;
const WISCONSIN_BUDGET: Duration = Duration::from_secs(10);

const WINE_GREEN: usize = 5;
const WINE_BUDGET: Duration = Duration::from_secs(10);

// Pima with the SVM, in percent.
const PIMA_TOP: f64 = 75.81;
const PIMA_BOTTOM: f64 = 65.29;
const PIMA_MIN_GAP: f64 = 5.0;
const PIMA_TOLERANCE: f64 = 5.0;
const PIMA_BUDGET: Duration = Duration::from_secs(180);

const TREND_BUDGET: Duration = Duration::from_secs(15 * 60);

const FORMULA_INSTANCES: usize = 150;

const SHAPLEY_PERMUTATIONS: usize = 2000;
const SHAPLEY_TOLERANCE: f64 = 0.02;
const EFFICIENCY_TOLERANCE: f64 = 1e-12;

const SCALING_ROWS: usize = 2000;
const SCALING_FEATURES: usize = 40;
const SCALING_MAX_RATIO: f64 = 5.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn load(name: &str) -> Dataset {
    load_csv(common::data_path(name), &Default::default()).expect("dataset loads")
}

fn within(elapsed: Duration, budget: Duration) -> (bool, String) {
    (elapsed < budget, format!("{:.2}s of {}s", elapsed.as_secs_f64(), budget.as_secs()))
}

fn spearman(order: &[String], reference: &[&str]) -> f64 {
    let n = reference.len() as f64;
    let d2: f64 = reference
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let j = order.iter().position(|o| o == name).expect("feature present") as f64;
            (i as f64 - j).powi(2)
        })
        .sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

fn wisconsin_ranking() -> Outcome {
    let start = Instant::now();
    let scores = famex(&load("wisconsin.csv"), &FamexConfig::default()).unwrap();
    let order = rank_features(&scores);
    let (fast, time) = within(start.elapsed(), WISCONSIN_BUDGET);
    let mut top3: Vec<&str> = order[..3].iter().map(String::as_str).collect();
    top3.sort_unstable();
    let mut want: Vec<&str> = WISCONSIN_ORDER[..3].to_vec();
    want.sort_unstable();
    let rho = spearman(&order, &WISCONSIN_ORDER);
    let pass = top3 == want && order[0] == WISCONSIN_ORDER[0] && rho >= MIN_SPEARMAN && fast;
    outcome(pass, format!("top-3 {:?}, spearman {rho:.3} (min {MIN_SPEARMAN}), {time}", &order[..3]))
}

fn wine_map() -> Outcome {
    let start = Instant::now();
    let scores = famex(&load("winequality-red.csv"), &FamexConfig::default()).unwrap();
    let (fast, time) = within(start.elapsed(), WINE_BUDGET);
    let green = scores.features.iter().filter(|f| f.grade == Grade::Low).count();
    let fixed = scores.features.iter().find(|f| f.name == "fixed.acidity").unwrap().grade;
    let pass = green == WINE_GREEN && fixed == Grade::High && fast;
    outcome(pass, format!("{green} of {} grade 1, fixed.acidity grade {}, {time}", scores.features.len(), fixed.value()))
}

fn desk_config(classifiers: &[ClassifierKind]) -> ExperimentConfig {
    ExperimentConfig {
        classifiers: classifiers.iter().map(|&k| ClassifierSpec::new(k, SEED)).collect(),
        folds: 10,
        iterations: 10,
        seed: SEED,
        ..Default::default()
    }
}

fn pima_gap() -> Outcome {
    let start = Instant::now();
    let report = run_experiment(&[load("pima.csv")], &desk_config(&[ClassifierKind::Svm])).unwrap();
    let (fast, time) = within(start.elapsed(), PIMA_BUDGET);
    let pct = |s| report.cell("pima", Method::Famex, ClassifierKind::Svm, s).unwrap().mean * 100.0;
    let (top, bottom) = (pct(Subset::Top), pct(Subset::Bottom));
    let pass = top - bottom >= PIMA_MIN_GAP
        && (top - PIMA_TOP).abs() <= PIMA_TOLERANCE
        && (bottom - PIMA_BOTTOM).abs() <= PIMA_TOLERANCE
        && fast;
    outcome(
        pass,
        format!("top {top:.2} (ref {PIMA_TOP}), bottom {bottom:.2} (ref {PIMA_BOTTOM}), gap {:.2}, {time}", top - bottom),
    )
}

fn cross_dataset_trend() -> Outcome {
    let start = Instant::now();
    let report = run_experiment(&[load("wisconsin.csv"), load("pima.csv")], &desk_config(&ClassifierKind::ALL)).unwrap();
    let (fast, time) = within(start.elapsed(), TREND_BUDGET);
    let mut pass = fast;
    let mut parts = Vec::new();
    for k in ClassifierKind::ALL {
        let top = report.average(Method::Famex, k, Subset::Top).unwrap().mean * 100.0;
        let bottom = report.average(Method::Famex, k, Subset::Bottom).unwrap().mean * 100.0;
        pass &= top >= bottom;
        parts.push(format!("{k} {top:.2}/{bottom:.2}"));
    }
    outcome(pass, format!("{}, {time}", parts.join(", ")))
}

fn formula_suite() -> Outcome {
    match common::formula_suite(FORMULA_INSTANCES, SEED) {
        Ok(checks) => outcome(true, format!("{checks} checks on {FORMULA_INSTANCES} instances, rel tol {:e}", common::REL_TOL)),
        Err(e) => outcome(false, e),
    }
}

fn grading_suite() -> Outcome {
    match common::grading_suite() {
        Ok(cases) => outcome(true, format!("{cases} correlation patterns")),
        Err(e) => outcome(false, e),
    }
}

fn shapley() -> Outcome {
    let d = common::planted(300, 2, 1, SEED);
    let spec = ClassifierSpec::new(ClassifierKind::DecisionTree, SEED);
    let game = CharacteristicFunction::new(&spec, d.samples.view(), &d.labels, SEED).unwrap();
    let exact = common::exact_shapley(3, |s| game.value(s).unwrap());
    let estimate = monte_carlo_shapley(3, SHAPLEY_PERMUTATIONS, SEED, |s| game.value(s)).unwrap();
    let worst = exact.iter().zip(&estimate).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let gap = game.value(&[0, 1, 2]).unwrap() - game.value(&[]).unwrap();
    let efficiency = (exact.iter().sum::<f64>() - gap).abs();
    outcome(
        worst <= SHAPLEY_TOLERANCE && efficiency <= EFFICIENCY_TOLERANCE,
        format!("max |mc - exact| {worst:.4} (tol {SHAPLEY_TOLERANCE}), efficiency error {efficiency:e}"),
    )
}

fn compare_determinism() -> Outcome {
    let path = common::data_path("wisconsin.csv");
    let args = ["famex", "compare", path.to_str().unwrap(), "--format", "json"];
    let run = || {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = famex::cli::run(args, &mut out, &mut err);
        (code, out, String::from_utf8_lossy(&err).into_owned())
    };
    let start = Instant::now();
    let (c1, a, e1) = run();
    let (c2, b, e2) = run();
    if c1 != 0 || c2 != 0 {
        return outcome(false, format!("exit codes {c1}/{c2}: {e1}{e2}"));
    }
    outcome(a == b, format!("{} bytes, identical: {}, {:.2}s", a.len(), a == b, start.elapsed().as_secs_f64()))
}

fn best_of(runs: usize, f: impl Fn()) -> Duration {
    (0..runs)
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed()
        })
        .min()
        .unwrap()
}

fn scaling() -> Outcome {
    let small = common::planted(SCALING_ROWS, SCALING_FEATURES / 2, SCALING_FEATURES / 2, SEED);
    let large = common::planted(SCALING_ROWS, SCALING_FEATURES, SCALING_FEATURES, SEED);
    let config = FamexConfig::default();
    famex(&small, &config).unwrap();
    let t1 = best_of(5, || {
        famex(&small, &config).unwrap();
    });
    let t2 = best_of(5, || {
        famex(&large, &config).unwrap();
    });
    let ratio = t2.as_secs_f64() / t1.as_secs_f64();
    outcome(
        ratio < SCALING_MAX_RATIO,
        format!(
            "n={SCALING_FEATURES} {:.2}ms, n={} {:.2}ms, ratio {ratio:.2} (max {SCALING_MAX_RATIO})",
            t1.as_secs_f64() * 1e3,
            2 * SCALING_FEATURES,
            t2.as_secs_f64() * 1e3
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("wisconsin_ranking", wisconsin_ranking),
        ("winequality_fam", wine_map),
        ("pima_svm_top_vs_bottom", pima_gap),
        ("cross_dataset_trend", cross_dataset_trend),
        ("formula_oracles", formula_suite),
        ("grading_rules", grading_suite),
        ("shapley_exact", shapley),
        ("compare_determinism", compare_determinism),
        ("scaling", scaling),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
