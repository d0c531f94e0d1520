//! C ABI for the `diproperm` library.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free` function. Every fallible call returns a [`DppStatus`];
//! on failure, [`dpp_last_error_message`] describes the error for the
//! calling thread. Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use diproperm::dataset::{load_dense, load_sparse, DenseOptions, LabelColumn};
use diproperm::direction::loadings_of;
use diproperm::engine::{diproperm as run_test, DppConfig as CoreConfig, DppResult as CoreResult};
use diproperm::report::emit_result_json;
use diproperm::{Classifier, DppError, Label, LabeledDataset, PermutationPlan, Scheme, SolverOptions, Statistic};

/// Opaque dataset handle.
pub struct DppDataset {
    inner: LabeledDataset,
}

/// Opaque result handle.
pub struct DppResult {
    inner: CoreResult,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DppStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidData = 5,
    InvalidArgument = 6,
    NotConverged = 7,
    Numeric = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DppClassifier {
    Dwd = 0,
    Md = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DppStatistic {
    Md = 0,
    T = 1,
    Med = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DppScheme {
    Balanced = 0,
    Unbalanced = 1,
}

/// Run configuration. Enumerated fields hold `DppClassifier`, `DppStatistic`
/// and `DppScheme` values; anything else is rejected.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct DppConfig {
    pub classifier: u32,
    pub statistic: u32,
    pub scheme: u32,
    pub permutations: usize,
    pub seed: u64,
    pub alpha: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Worker threads; 0 picks the number of available cores.
    pub workers: usize,
    pub retain_all: bool,
}

/// Headline numbers of a finished run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct DppSummary {
    pub statistic: f64,
    pub p_value: f64,
    /// Meaningful only when `has_z_score` is true.
    pub z_score: f64,
    pub has_z_score: bool,
    pub cutoff: f64,
    pub permutations: usize,
    pub n_samples: usize,
    pub n_features: usize,
}

enum Failure {
    Null(&'static str),
    Utf8(&'static str),
    BufferTooSmall { needed: usize, given: usize },
    Core(DppError),
}

impl From<DppError> for Failure {
    fn from(e: DppError) -> Self {
        Failure::Core(e)
    }
}

fn core_status(e: &DppError) -> DppStatus {
    match e {
        DppError::Io { .. } => DppStatus::Io,
        DppError::Parse { .. }
        | DppError::LabelDomain { .. }
        | DppError::RaggedRows { .. }
        | DppError::NonMonotoneIndex { .. }
        | DppError::ResultFormat(_) => DppStatus::Parse,
        DppError::DatasetEmpty
        | DppError::TooFewSamples { .. }
        | DppError::NonFinite { .. }
        | DppError::SingleClass
        | DppError::DimensionMismatch { .. }
        | DppError::Index { .. }
        | DppError::DuplicateIndex(_)
        | DppError::MissingLabels
        | DppError::ClassTooSmall { .. }
        | DppError::InfeasibleBalance { .. } => DppStatus::InvalidData,
        DppError::InvalidArgument { .. } | DppError::PanelUnavailable(_) => DppStatus::InvalidArgument,
        DppError::NonConverged { .. } => DppStatus::NotConverged,
        DppError::ZeroDirection | DppError::DegenerateScale | DppError::ZeroVariance | DppError::Empty => {
            DppStatus::Numeric
        }
        DppError::Permutation { source, .. } => core_status(source),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DppStatus {
    let (status, message) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => return DppStatus::Ok,
        Ok(Err(Failure::Null(name))) => (DppStatus::NullPointer, format!("{name} is null")),
        Ok(Err(Failure::Utf8(name))) => (DppStatus::InvalidUtf8, format!("{name} is not valid UTF-8")),
        Ok(Err(Failure::BufferTooSmall { needed, given })) => (
            DppStatus::BufferTooSmall,
            format!("buffer holds {given} values, {needed} needed"),
        ),
        Ok(Err(Failure::Core(e))) => (core_status(&e), e.to_string()),
        Err(payload) => {
            let what = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (DppStatus::Panic, format!("internal panic: {what}"))
        }
    };
    set_last_error(message);
    status
}

unsafe fn path_arg(p: *const c_char, name: &'static str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(name))?;
    Ok(PathBuf::from(s))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Copies `values` into a caller buffer of `len` slots and stores the
/// required length in `written` (when non-null) either way.
unsafe fn fill_buffer(values: &[f64], buf: *mut f64, len: usize, written: *mut usize) -> Result<(), Failure> {
    if !written.is_null() {
        *written = values.len();
    }
    if len < values.len() {
        return Err(Failure::BufferTooSmall {
            needed: values.len(),
            given: len,
        });
    }
    if values.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(Failure::Null("buf"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dpp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dpp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn dpp_config_default() -> DppConfig {
    let core = CoreConfig::default();
    DppConfig {
        classifier: DppClassifier::Dwd as u32,
        statistic: DppStatistic::Md as u32,
        scheme: DppScheme::Balanced as u32,
        permutations: core.plan.permutations,
        seed: core.plan.seed,
        alpha: core.alpha,
        tol: core.solver.tol,
        max_iter: core.solver.max_iter,
        workers: 0,
        retain_all: false,
    }
}

fn to_core_config(c: &DppConfig) -> Result<CoreConfig, DppError> {
    let classifier = match c.classifier {
        0 => Classifier::Dwd,
        1 => Classifier::Md,
        v => return Err(invalid("classifier", v)),
    };
    let statistic = match c.statistic {
        0 => Statistic::Md,
        1 => Statistic::T,
        2 => Statistic::Med,
        v => return Err(invalid("statistic", v)),
    };
    let scheme = match c.scheme {
        0 => Scheme::Balanced,
        1 => Scheme::Unbalanced,
        v => return Err(invalid("scheme", v)),
    };
    let config = CoreConfig {
        classifier,
        statistic,
        plan: PermutationPlan::new(scheme, c.permutations, c.seed)?,
        alpha: c.alpha,
        solver: SolverOptions {
            tol: c.tol,
            max_iter: c.max_iter,
            record_trace: false,
        },
        retain_all: c.retain_all,
    };
    config.validate()?;
    Ok(config)
}

fn invalid(name: &'static str, value: u32) -> DppError {
    DppError::InvalidArgument {
        name,
        message: format!("unknown value {value}"),
    }
}

/// Builds a dataset from `n_samples * n_features` row-major values and
/// `n_samples` labels in {-1, 1}.
#[no_mangle]
pub unsafe extern "C" fn dpp_dataset_new(
    features: *const f64,
    n_samples: usize,
    n_features: usize,
    labels: *const i8,
    out: *mut *mut DppDataset,
) -> DppStatus {
    guard(|| {
        if features.is_null() {
            return Err(Failure::Null("features"));
        }
        if labels.is_null() {
            return Err(Failure::Null("labels"));
        }
        let total = n_samples.checked_mul(n_features).ok_or_else(|| {
            Failure::Core(DppError::InvalidArgument {
                name: "n_features",
                message: "n_samples * n_features overflows".into(),
            })
        })?;
        let x = std::slice::from_raw_parts(features, total).to_vec();
        let raw = std::slice::from_raw_parts(labels, n_samples);
        let mut y = Vec::with_capacity(n_samples);
        for (row, &v) in raw.iter().enumerate() {
            y.push(Label::try_from(v).map_err(|_| DppError::LabelDomain {
                row: row + 1,
                value: v.to_string(),
            })?);
        }
        let inner = LabeledDataset::new(x, n_features, y)?;
        write_out(out, DppDataset { inner })
    })
}

/// Loads a sparse `label index:value` file.
#[no_mangle]
pub unsafe extern "C" fn dpp_dataset_load_sparse(path: *const c_char, out: *mut *mut DppDataset) -> DppStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let inner = load_sparse(&path)?;
        write_out(out, DppDataset { inner })
    })
}

/// Loads a dense CSV file. `label_column` is a 0-based column index, or
/// negative when labels come from `labels_path` (which may then not be null).
#[no_mangle]
pub unsafe extern "C" fn dpp_dataset_load_dense(
    path: *const c_char,
    has_header: bool,
    label_column: isize,
    labels_path: *const c_char,
    out: *mut *mut DppDataset,
) -> DppStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let labels_path = if labels_path.is_null() {
            None
        } else {
            Some(path_arg(labels_path, "labels_path")?)
        };
        let opts = DenseOptions {
            has_header,
            label_column: usize::try_from(label_column).ok().map(LabelColumn::Index),
        };
        let inner = load_dense(&path, &opts, labels_path.as_deref())?;
        write_out(out, DppDataset { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn dpp_dataset_n_samples(dataset: *const DppDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.n_samples())
}

#[no_mangle]
pub unsafe extern "C" fn dpp_dataset_n_features(dataset: *const DppDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.n_features())
}

#[no_mangle]
pub unsafe extern "C" fn dpp_dataset_free(dataset: *mut DppDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Runs the test. `config` may be null for the defaults.
#[no_mangle]
pub unsafe extern "C" fn dpp_run(
    dataset: *const DppDataset,
    config: *const DppConfig,
    out: *mut *mut DppResult,
) -> DppStatus {
    guard(|| {
        let ds = ref_arg(dataset, "dataset")?;
        let cfg = config.as_ref().copied().unwrap_or_else(|| dpp_config_default());
        let core = to_core_config(&cfg)?;
        let workers = match cfg.workers {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        };
        let inner = run_test(&ds.inner, &core, workers)?;
        write_out(out, DppResult { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn dpp_result_summary(result: *const DppResult, out: *mut DppSummary) -> DppStatus {
    guard(|| {
        let r = &ref_arg(result, "result")?.inner;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = DppSummary {
            statistic: r.observed_statistic,
            p_value: r.p_value,
            z_score: r.z_score.unwrap_or(f64::NAN),
            has_z_score: r.z_score.is_some(),
            cutoff: r.cutoff,
            permutations: r.perm_statistics.len(),
            n_samples: r.n_samples,
            n_features: r.n_features,
        };
        Ok(())
    })
}

/// Copies the B permutation statistics (in permutation order) into `buf`.
#[no_mangle]
pub unsafe extern "C" fn dpp_result_perm_statistics(
    result: *const DppResult,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
) -> DppStatus {
    guard(|| {
        let r = &ref_arg(result, "result")?.inner;
        fill_buffer(&r.perm_statistics, buf, len, written)
    })
}

/// Copies the unit direction vector into `buf` and the intercept into
/// `beta` (when non-null).
#[no_mangle]
pub unsafe extern "C" fn dpp_result_direction(
    result: *const DppResult,
    buf: *mut f64,
    len: usize,
    written: *mut usize,
    beta: *mut f64,
) -> DppStatus {
    guard(|| {
        let r = &ref_arg(result, "result")?.inner;
        fill_buffer(&r.observed_direction.w, buf, len, written)?;
        if !beta.is_null() {
            *beta = r.observed_direction.beta;
        }
        Ok(())
    })
}

/// The `loadnum` largest loadings by magnitude: 1-based variable indices
/// and signed values, each into a caller buffer of `loadnum` slots.
#[no_mangle]
pub unsafe extern "C" fn dpp_result_loadings(
    result: *const DppResult,
    loadnum: usize,
    indices: *mut usize,
    values: *mut f64,
) -> DppStatus {
    guard(|| {
        let r = &ref_arg(result, "result")?.inner;
        if indices.is_null() {
            return Err(Failure::Null("indices"));
        }
        if values.is_null() {
            return Err(Failure::Null("values"));
        }
        let top = loadings_of(&r.observed_direction, loadnum, None)?;
        for (k, l) in top.iter().enumerate() {
            *indices.add(k) = l.index;
            *values.add(k) = l.value;
        }
        Ok(())
    })
}

/// Writes the full result document as JSON.
#[no_mangle]
pub unsafe extern "C" fn dpp_result_write_json(result: *const DppResult, path: *const c_char) -> DppStatus {
    guard(|| {
        let r = &ref_arg(result, "result")?.inner;
        let path = path_arg(path, "path")?;
        emit_result_json(r, &path)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dpp_result_free(result: *mut DppResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_mapping_unwraps_permutation_errors() {
        let e = DppError::Permutation {
            perm_index: 3,
            source: Box::new(DppError::ZeroVariance),
        };
        assert_eq!(core_status(&e), DppStatus::Numeric);
        assert_eq!(core_status(&DppError::SingleClass), DppStatus::InvalidData);
    }

    #[test]
    fn default_config_round_trips() {
        let core = to_core_config(&dpp_config_default()).unwrap();
        assert_eq!(core, CoreConfig::default());
    }

    #[test]
    fn unknown_enum_values_rejected() {
        let mut c = dpp_config_default();
        c.statistic = 9;
        assert!(to_core_config(&c).is_err());
    }

    #[test]
    fn panics_are_contained() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, DppStatus::Panic);
        let msg = unsafe { CStr::from_ptr(dpp_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }
}
