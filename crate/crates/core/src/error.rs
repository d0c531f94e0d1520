use std::path::PathBuf;

use thiserror::Error;

use crate::direction::DwdModel;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum DppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {col}: {message}")]
    Parse { row: usize, col: usize, message: String },

    #[error("label {value:?} at row {row} is not -1 or 1; recode the classes as -1 and 1 (e.g. map 0 or 2 to -1)")]
    LabelDomain { row: usize, value: String },

    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },

    #[error("row {row}: feature index {index} does not increase past {previous}")]
    NonMonotoneIndex { row: usize, index: usize, previous: usize },

    #[error("dataset is empty")]
    DatasetEmpty,

    #[error("dataset has {found} samples, at least {required} are needed")]
    TooFewSamples { found: usize, required: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("only one class present; both -1 and 1 labels are required")]
    SingleClass,

    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range (limit {limit})")]
    Index { index: usize, limit: usize },

    #[error("row index {0} selected more than once")]
    DuplicateIndex(usize),

    #[error("no labels supplied: give a label column or a labels file")]
    MissingLabels,

    #[error("class means coincide; the mean-difference direction is undefined")]
    ZeroDirection,

    #[error("all between-class distances are zero; penalty parameter is undefined")]
    DegenerateScale,

    #[error("DWD solver did not converge after {iterations} iterations (kkt residual {kkt_residual:.3e})")]
    NonConverged {
        iterations: usize,
        kkt_residual: f64,
        model: Box<DwdModel>,
    },

    #[error("zero variance; statistic is undefined")]
    ZeroVariance,

    #[error("class {label} has {size} members, at least {required} are needed")]
    ClassTooSmall { label: i8, size: usize, required: usize },

    #[error("balanced permutation needs at least 2 members per class (have {negatives} negative, {positives} positive); use the unbalanced scheme")]
    InfeasibleBalance { negatives: usize, positives: usize },

    #[error("empty permutation distribution")]
    Empty,

    #[error("invalid {name}: {message}")]
    InvalidArgument { name: &'static str, message: String },

    #[error("permutation {perm_index} failed: {source}")]
    Permutation {
        perm_index: usize,
        #[source]
        source: Box<DppError>,
    },

    #[error("panel {0} is not retained in this result")]
    PanelUnavailable(String),

    #[error("malformed result document: {0}")]
    ResultFormat(String),
}

impl DppError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DppError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        DppError::InvalidArgument {
            name,
            message: message.into(),
        }
    }

    /// Process exit status used by the command-line tool.
    ///
    /// 1 for I/O, 3 for solver convergence failures, 2 for everything the
    /// user can fix by changing inputs or flags.
    pub fn exit_code(&self) -> u8 {
        match self {
            DppError::Io { .. } => 1,
            DppError::NonConverged { .. } => 3,
            DppError::Permutation { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub type Result<T, E = DppError> = std::result::Result<T, E>;
