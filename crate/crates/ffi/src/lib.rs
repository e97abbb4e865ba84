//! C ABI for famex.
//!
//! Every entry point returns a [`FamexStatus`]. On failure a description is
//! available from [`famex_last_error_message`] on the same thread until the
//! next failing call. Handles are opaque and must be released with their
//! matching `*_free` function; strings returned through out-parameters must
//! be released with [`famex_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use famex::dataset::{load_csv, parse_csv, ClassColumn, Dataset, LoadOptions};
use famex::fam::{build_fam_graph, export_graph, FamGraph, FamOptions, GraphFormat, Thresholds};
use famex::scoring::{famex_with_graph, FamexConfig, FeatureScores};
use famex::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamexStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Data = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamexGraphFormat {
    Dot = 0,
    Json = 1,
}

/// Numeric scores of one feature; the name is fetched with `famex_scores_name`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamexFeatureScore {
    pub grade: u8,
    pub similarity_score: f64,
    pub relevance: f64,
    pub relevance_score: f64,
    pub importance_score: f64,
    /// 1-based position in the importance ranking.
    pub rank: usize,
}

pub struct FamexDataset(Dataset);
pub struct FamexScores {
    scores: FeatureScores,
    ranks: Vec<usize>,
}
pub struct FamexGraph(FamGraph);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FamexStatus {
    match e {
        Error::FileNotFound(_) | Error::Io(_) => FamexStatus::Io,
        Error::Parse { .. } | Error::Json(_) => FamexStatus::Parse,
        Error::InvalidArgument(_) | Error::UnknownFormat(_) => FamexStatus::InvalidArgument,
        _ => FamexStatus::Data,
    }
}

struct Fail(FamexStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(FamexStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FamexStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FamexStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            FamexStatus::Panic
        }
    }
}

unsafe fn opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| Fail(FamexStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn load_options(class_col: *const c_char) -> Result<LoadOptions, Fail> {
    let class_column = match opt_str(class_col, "class_col")? {
        Some(s) => s.parse::<ClassColumn>()?,
        None => ClassColumn::Last,
    };
    Ok(LoadOptions {
        class_column,
        ..LoadOptions::default()
    })
}

fn fam_options(low: f64, high: f64, corr_decimals: i32) -> Result<FamOptions, Fail> {
    Ok(FamOptions {
        thresholds: Thresholds::new(low, high)?,
        correlation_decimals: u32::try_from(corr_decimals).ok(),
    })
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(FamexStatus::Data, "string contains NUL".into()))?;
    write_out(out, c.into_raw())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message describing the last failure on this thread, or null if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn famex_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn famex_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn famex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a CSV file. `class_col` may be null (last column), a header name or a 0-based index.
///
/// # Safety
/// `path` and `class_col` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_dataset_load_csv(
    path: *const c_char,
    class_col: *const c_char,
    out: *mut *mut FamexDataset,
) -> FamexStatus {
    guard(|| {
        let path = opt_str(path, "path")?.ok_or_else(|| null("path"))?;
        let data = load_csv(path, &load_options(class_col)?)?;
        write_out(out, Box::into_raw(Box::new(FamexDataset(data))))
    })
}

/// Parses CSV bytes held in memory.
///
/// # Safety
/// `bytes` must point to `len` readable bytes; string arguments must be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn famex_dataset_parse_csv(
    bytes: *const u8,
    len: usize,
    name: *const c_char,
    class_col: *const c_char,
    out: *mut *mut FamexDataset,
) -> FamexStatus {
    guard(|| {
        if bytes.is_null() {
            return Err(null("bytes"));
        }
        let slice = std::slice::from_raw_parts(bytes, len);
        let name = opt_str(name, "name")?.unwrap_or("dataset");
        let data = parse_csv(slice, name, &load_options(class_col)?)?;
        write_out(out, Box::into_raw(Box::new(FamexDataset(data))))
    })
}

/// # Safety
/// `dataset` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn famex_dataset_free(dataset: *mut FamexDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// # Safety
/// `dataset` must be a live handle; `rows`, `features` and `classes` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_dataset_shape(
    dataset: *const FamexDataset,
    rows: *mut usize,
    features: *mut usize,
    classes: *mut usize,
) -> FamexStatus {
    guard(|| {
        let d = &deref(dataset, "dataset")?.0;
        write_out(rows, d.n_rows())?;
        write_out(features, d.n_features())?;
        write_out(classes, d.n_classes())
    })
}

/// Name of feature `index`; free the result with `famex_string_free`.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_dataset_feature_name(
    dataset: *const FamexDataset,
    index: usize,
    out: *mut *mut c_char,
) -> FamexStatus {
    guard(|| {
        let d = &deref(dataset, "dataset")?.0;
        let name = d
            .feature_names
            .get(index)
            .ok_or_else(|| Fail(FamexStatus::OutOfRange, format!("feature index {index} out of range")))?;
        write_string(out, name.clone())
    })
}

/// Builds the feature association map. A negative `corr_decimals` compares raw correlations.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_graph_build(
    dataset: *const FamexDataset,
    low: f64,
    high: f64,
    corr_decimals: i32,
    out: *mut *mut FamexGraph,
) -> FamexStatus {
    guard(|| {
        let d = &deref(dataset, "dataset")?.0;
        let graph = build_fam_graph(d, &fam_options(low, high, corr_decimals)?)?;
        write_out(out, Box::into_raw(Box::new(FamexGraph(graph))))
    })
}

/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn famex_graph_free(graph: *mut FamexGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must be a live handle; `vertices` and `edges` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_graph_size(
    graph: *const FamexGraph,
    vertices: *mut usize,
    edges: *mut usize,
) -> FamexStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        write_out(vertices, g.vertices.len())?;
        write_out(edges, g.edges.len())
    })
}

/// Grade (1, 2 or 3) of vertex `index`.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_graph_grade(graph: *const FamexGraph, index: usize, out: *mut u8) -> FamexStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        let v = g
            .vertices
            .get(index)
            .ok_or_else(|| Fail(FamexStatus::OutOfRange, format!("vertex index {index} out of range")))?;
        write_out(out, v.grade.value())
    })
}

/// Serializes the graph; `format` is a `FamexGraphFormat` value. Free the
/// result with `famex_string_free`.
///
/// # Safety
/// `graph` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_graph_export(
    graph: *const FamexGraph,
    format: u32,
    out: *mut *mut c_char,
) -> FamexStatus {
    guard(|| {
        let g = &deref(graph, "graph")?.0;
        let format = match format {
            f if f == FamexGraphFormat::Dot as u32 => GraphFormat::Dot,
            f if f == FamexGraphFormat::Json as u32 => GraphFormat::Json,
            other => {
                return Err(Fail(FamexStatus::InvalidArgument, format!("unknown graph format {other}")))
            }
        };
        write_string(out, export_graph(g, format)?)
    })
}

/// Runs FAMeX scoring. A negative `corr_decimals` compares raw correlations.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_score(
    dataset: *const FamexDataset,
    bins: usize,
    low: f64,
    high: f64,
    corr_decimals: i32,
    out: *mut *mut FamexScores,
) -> FamexStatus {
    guard(|| {
        let d = &deref(dataset, "dataset")?.0;
        let config = FamexConfig {
            bins,
            fam: fam_options(low, high, corr_decimals)?,
        };
        let graph = build_fam_graph(d, &config.fam)?;
        let scores = famex_with_graph(d, &graph, config.bins)?;
        let ranks = scores.ranks();
        write_out(out, Box::into_raw(Box::new(FamexScores { scores, ranks })))
    })
}

/// # Safety
/// `scores` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn famex_scores_free(scores: *mut FamexScores) {
    if !scores.is_null() {
        drop(Box::from_raw(scores));
    }
}

/// # Safety
/// `scores` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_scores_len(scores: *const FamexScores, out: *mut usize) -> FamexStatus {
    guard(|| write_out(out, deref(scores, "scores")?.scores.features.len()))
}

/// Scores of feature `index` (column order).
///
/// # Safety
/// `scores` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_scores_get(
    scores: *const FamexScores,
    index: usize,
    out: *mut FamexFeatureScore,
) -> FamexStatus {
    guard(|| {
        let s = deref(scores, "scores")?;
        let f = s
            .scores
            .features
            .get(index)
            .ok_or_else(|| Fail(FamexStatus::OutOfRange, format!("feature index {index} out of range")))?;
        write_out(
            out,
            FamexFeatureScore {
                grade: f.grade.value(),
                similarity_score: f.similarity_score,
                relevance: f.relevance,
                relevance_score: f.relevance_score,
                importance_score: f.importance_score,
                rank: s.ranks[index],
            },
        )
    })
}

/// # Safety
/// `scores` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_scores_name(
    scores: *const FamexScores,
    index: usize,
    out: *mut *mut c_char,
) -> FamexStatus {
    guard(|| {
        let s = deref(scores, "scores")?;
        let f = s
            .scores
            .features
            .get(index)
            .ok_or_else(|| Fail(FamexStatus::OutOfRange, format!("feature index {index} out of range")))?;
        write_string(out, f.name.clone())
    })
}

/// Scores as JSON, identical to `famex score --format json`.
///
/// # Safety
/// `scores` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn famex_scores_to_json(scores: *const FamexScores, out: *mut *mut c_char) -> FamexStatus {
    guard(|| write_string(out, deref(scores, "scores")?.scores.to_json()?))
}
