//! Feature importance through a feature association map (FAM).
//!
//! The crate scores features by combining two signals:
//!
//! - *redundancy*: features are graded 1..=3 from how strongly they
//!   correlate with the rest of the feature set, and
//! - *relevance*: mutual information between each (discretized) feature
//!   and the class label.
//!
//! Around that core sit two model-agnostic baselines (permutation feature
//! importance and Monte-Carlo Shapley values), a set of from-scratch
//! classifiers, and a top-p% / bottom-p% cross-validated evaluation
//! harness. The `famex` binary exposes all of it on the command line and
//! over a small HTTP API.
//!
//! ```no_run
//! use famex::dataset::{load_csv, LoadOptions};
//! use famex::scoring::{famex, rank_features, FamexConfig};
//!
//! let data = load_csv("data/wisconsin.csv", &LoadOptions::default()).unwrap();
//! let scores = famex(&data, &FamexConfig::default()).unwrap();
//! for name in rank_features(&scores) {
//!     println!("{name}");
//! }
//! ```

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod fam;
pub mod harness;
pub mod models;
pub mod scoring;
pub mod seed;
pub mod server;
pub mod stats;

pub use error::{Error, Result};
