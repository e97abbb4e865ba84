//! Helpers shared by the integration test targets: dataset paths, synthetic
//! data, and brute-force reference implementations written independently of
//! the library code.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use famex::dataset::{discretize, Dataset};
use famex::fam::{grade_features, Grade, Thresholds};
use famex::scoring::{famex, FamexConfig};
use famex::stats::{correlation_matrix, entropy, joint_entropy, mi_classif, mutual_information, pearson};
use famex::Error;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Balanced binary labels; the first `signal` columns are `2·y + N(0,1)`,
/// the remaining `noise` columns are `N(0,1)`.
pub fn planted(m: usize, signal: usize, noise: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let n = signal + noise;
    let labels: Vec<String> = (0..m).map(|i| (i % 2).to_string()).collect();
    let samples = Array2::from_shape_fn((m, n), |(i, j)| {
        let shift = if j < signal { 2.0 * (i % 2) as f64 } else { 0.0 };
        shift + normal(&mut r)
    });
    let names = (0..n)
        .map(|j| if j < signal { format!("signal{j}") } else { format!("noise{}", j - signal) })
        .collect();
    Dataset::new("planted", names, samples, &labels).unwrap()
}

// ---------------------------------------------------------------------------
// reference implementations

/// Covariance over variances, straight from the population definitions.
pub fn pearson_ref(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut mx = 0.0;
    let mut my = 0.0;
    for i in 0..x.len() {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..x.len() {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    cov /= n;
    vx /= n;
    vy /= n;
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

fn probabilities<K: std::hash::Hash + Eq>(keys: impl Iterator<Item = K>) -> HashMap<K, f64> {
    let mut counts: HashMap<K, f64> = HashMap::new();
    let mut total = 0.0;
    for k in keys {
        *counts.entry(k).or_insert(0.0) += 1.0;
        total += 1.0;
    }
    counts.values_mut().for_each(|c| *c /= total);
    counts
}

pub fn entropy_ref<K: std::hash::Hash + Eq + Clone>(xs: &[K]) -> f64 {
    -probabilities(xs.iter().cloned()).values().map(|p| p * p.log2()).sum::<f64>()
}

pub fn joint_entropy_ref(a: &[usize], b: &[usize]) -> f64 {
    -probabilities(a.iter().zip(b)).values().map(|p| p * p.log2()).sum::<f64>()
}

/// Σ p(c, f) · log2(p(c, f) / (p(c) p(f))) over the joint probability table.
pub fn mi_ref(f: &[usize], c: &[usize]) -> f64 {
    let pf = probabilities(f.iter());
    let pc = probabilities(c.iter());
    let pj = probabilities(f.iter().zip(c));
    pj.iter()
        .map(|((a, b), p)| p * (p / (pf[a] * pc[b])).log2())
        .sum::<f64>()
        .max(0.0)
}

pub fn bins_ref(column: &[f64], b: usize) -> Vec<usize> {
    let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    column
        .iter()
        .map(|&v| {
            if hi == lo {
                0
            } else {
                let k = ((v - lo) / (hi - lo) * b as f64).floor() as usize;
                if k >= b { b - 1 } else { k }
            }
        })
        .collect()
}

/// The three grading rules as written: grade 1 when no correlation reaches
/// `low`; grade 3 when any reaches `high` or three or more reach `low`;
/// grade 2 otherwise.
pub fn grade_ref(row: &[f64], own: usize, low: f64, high: f64) -> u8 {
    let others: Vec<f64> = row.iter().enumerate().filter(|(j, _)| *j != own).map(|(_, r)| r.abs()).collect();
    let at_least_low = others.iter().filter(|&&r| r >= low).count();
    let at_least_high = others.iter().filter(|&&r| r >= high).count();
    if at_least_low == 0 {
        1
    } else if at_least_high >= 1 || at_least_low >= 3 {
        3
    } else {
        2
    }
}

pub struct ScoresRef {
    pub grades: Vec<u8>,
    pub similarity: Vec<f64>,
    pub mi: Vec<f64>,
    pub relevance: Vec<f64>,
    pub importance: Vec<f64>,
}

/// Whole pipeline by hand: |r| rounded to two decimals, graded at 0.67 / 0.9,
/// equal-width MI, then the three score ratios.
pub fn scores_ref(d: &Dataset, bins: usize) -> Option<ScoresRef> {
    let n = d.n_features();
    let cols: Vec<Vec<f64>> = (0..n).map(|j| d.column(j).to_vec()).collect();
    let mut grades = Vec::new();
    for i in 0..n {
        let row: Vec<f64> = (0..n)
            .map(|j| if i == j { 0.0 } else { (pearson_ref(&cols[i], &cols[j]).abs() * 100.0).round() / 100.0 })
            .collect();
        grades.push(grade_ref(&row, i, 0.67, 0.9));
    }
    let mean_g = grades.iter().map(|&g| g as f64).sum::<f64>() / n as f64;
    let similarity: Vec<f64> = grades.iter().map(|&g| (g as f64) * (g as f64) / mean_g).collect();
    let mi: Vec<f64> = cols.iter().map(|c| mi_ref(&bins_ref(c, bins), &d.labels)).collect();
    let mean_mi = mi.iter().sum::<f64>() / n as f64;
    if mean_mi == 0.0 {
        return None;
    }
    let relevance: Vec<f64> = mi.iter().map(|v| v / mean_mi).collect();
    let importance = relevance.iter().zip(&similarity).map(|(r, s)| r / s).collect();
    Some(ScoresRef {
        grades,
        similarity,
        mi,
        relevance,
        importance,
    })
}

// ---------------------------------------------------------------------------
// suites shared by the dedicated test files and the acceptance report

pub const REL_TOL: f64 = 1e-9;
/// Absolute floor for values that are zero up to rounding (e.g. MI of independent columns).
pub const ABS_FLOOR: f64 = 1e-12;

pub fn close(a: f64, b: f64) -> bool {
    let diff = (a - b).abs();
    diff <= REL_TOL * a.abs().max(b.abs()) || diff <= ABS_FLOOR
}

fn check(what: &str, got: f64, want: f64) -> Result<(), String> {
    if close(got, want) {
        Ok(())
    } else {
        Err(format!("{what}: got {got:e}, reference {want:e}"))
    }
}

fn random_instance(r: &mut ChaCha8Rng) -> Dataset {
    loop {
        let m = r.random_range(6..40);
        let n = r.random_range(2..7);
        let k = r.random_range(2..5);
        let integer = r.random_bool(0.5);
        let samples = Array2::from_shape_fn((m, n), |_| {
            if integer {
                r.random_range(0..6) as f64
            } else {
                r.random_range(-5.0..5.0)
            }
        });
        // mix in a correlated column so that every grade occurs
        let mut samples = samples;
        if n >= 3 && r.random_bool(0.5) {
            for i in 0..m {
                samples[[i, 1]] = samples[[i, 0]] * 2.0 + r.random_range(-0.5..0.5);
            }
        }
        let labels: Vec<String> = (0..m).map(|_| r.random_range(0..k).to_string()).collect();
        let names = (0..n).map(|j| format!("x{j}")).collect();
        if let Ok(d) = Dataset::new("random", names, samples, &labels) {
            return d;
        }
    }
}

/// Checks correlation, entropies, MI and the three scores against the
/// reference implementations on `instances` random datasets. Returns the
/// number of individual comparisons made.
pub fn formula_suite(instances: usize, seed: u64) -> Result<usize, String> {
    let mut r = rng(seed);
    let mut checks = 0;
    for t in 0..instances {
        let d = random_instance(&mut r);
        let n = d.n_features();
        let bins = r.random_range(2..12);
        let cols: Vec<Vec<f64>> = (0..n).map(|j| d.column(j).to_vec()).collect();
        let ctx = |s: &str| format!("instance {t}: {s}");

        let corr = correlation_matrix(&d).map_err(|e| ctx(&e.to_string()))?;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let want = pearson_ref(&cols[i], &cols[j]);
                check(&ctx(&format!("pearson({i},{j})")), pearson(&cols[i], &cols[j]).unwrap(), want)?;
                check(&ctx(&format!("|corr|[{i}][{j}]")), corr.get(i, j), want.abs())?;
                checks += 2;
            }
        }

        check(&ctx("H(C)"), entropy(&d.labels).unwrap(), entropy_ref(&d.labels))?;
        checks += 1;
        for (j, col) in cols.iter().enumerate() {
            let disc = discretize(col, bins).unwrap();
            let reference_bins = bins_ref(col, bins);
            if disc.bin_indices != reference_bins {
                return Err(ctx(&format!("binning of column {j} differs")));
            }
            check(&ctx(&format!("H(f{j})")), entropy(&disc.bin_indices).unwrap(), entropy_ref(&reference_bins))?;
            check(
                &ctx(&format!("H(C,f{j})")),
                joint_entropy(&d.labels, &disc.bin_indices).unwrap(),
                joint_entropy_ref(&d.labels, &reference_bins),
            )?;
            check(
                &ctx(&format!("MI(C,f{j})")),
                mutual_information(&disc, &d.labels).unwrap(),
                mi_ref(&reference_bins, &d.labels),
            )?;
            checks += 3;
        }
        let mi = mi_classif(&d, bins).unwrap();

        let config = FamexConfig {
            bins,
            ..FamexConfig::default()
        };
        match (famex(&d, &config), scores_ref(&d, bins)) {
            (Ok(s), Some(want)) => {
                for (j, f) in s.features.iter().enumerate() {
                    if f.grade.value() != want.grades[j] {
                        return Err(ctx(&format!("grade of f{j}: {} vs {}", f.grade.value(), want.grades[j])));
                    }
                    check(&ctx(&format!("mi_classif f{j}")), mi.values[j], want.mi[j])?;
                    check(&ctx(&format!("similarity f{j}")), f.similarity_score, want.similarity[j])?;
                    check(&ctx(&format!("relevance f{j}")), f.relevance_score, want.relevance[j])?;
                    check(&ctx(&format!("importance f{j}")), f.importance_score, want.importance[j])?;
                    checks += 5;
                }
            }
            (Err(Error::Degenerate(_)), None) => checks += 1,
            (got, want) => {
                return Err(ctx(&format!(
                    "pipeline outcome differs: library ok={}, reference ok={}",
                    got.is_ok(),
                    want.is_some()
                )))
            }
        }
    }
    Ok(checks)
}

/// Every assignment of {below low, exactly low, between, exactly high, above high}
/// to the six pairs of a 4-feature matrix, graded by the library and by the rules.
pub fn grading_suite() -> Result<usize, String> {
    let t = Thresholds::default();
    let levels = [0.3, t.low, 0.8, t.high, 0.95];
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut cases = 0;
    for code in 0..levels.len().pow(6) {
        let mut m = vec![vec![1.0; 4]; 4];
        let mut c = code;
        for &(i, j) in &pairs {
            let v = levels[c % levels.len()];
            c /= levels.len();
            m[i][j] = v;
            m[j][i] = v;
        }
        let corr = famex::stats::CorrelationMatrix::from_rows(m.clone(), true).map_err(|e| e.to_string())?;
        let got: Vec<u8> = grade_features(&corr, t).map_err(|e| e.to_string())?.into_iter().map(Grade::value).collect();
        let want: Vec<u8> = (0..4).map(|i| grade_ref(&m[i], i, t.low, t.high)).collect();
        if got != want {
            return Err(format!("matrix {m:?}: library {got:?}, rules {want:?}"));
        }
        cases += 1;
    }
    Ok(cases)
}

/// Exact Shapley values by enumerating every subset, with weights
/// |S|!(n−|S|−1)!/n!.
pub fn exact_shapley(n: usize, v: impl Fn(&[usize]) -> f64) -> Vec<f64> {
    let fact = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
    let mut phi = vec![0.0; n];
    for mask in 0u32..(1 << n) {
        let s: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).collect();
        let vs = v(&s);
        if s.len() == n {
            continue;
        }
        let w = fact(s.len()) * fact(n - s.len() - 1);
        for (i, p) in phi.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                let mut with: Vec<usize> = s.clone();
                with.push(i);
                with.sort_unstable();
                *p += w / fact(n) * (v(&with) - vs);
            }
        }
    }
    phi
}
