//! Labeled feature matrices and the on-disk formats they are read from.
//!
//! Three formats are understood:
//!
//! * dense: comma-separated reals, one sample per row, optional header row;
//! * sparse: `<label> <index>:<value> ...` per line with 1-based, strictly
//!   increasing indices (absent entries are zero);
//! * labels-only: tokens `-1` / `1`, one per line or comma separated.
//!
//! Features are always stored densely in row-major order.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{DppError, Result};

/// Smallest sample count accepted by [`LabeledDataset`].
pub const MIN_SAMPLES: usize = 4;

/// Binary class label, coded as -1 / +1 on disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Negative => -1.0,
            Label::Positive => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Negative => -1,
            Label::Positive => 1,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }

    /// Parses the exact tokens `-1`, `1` and `+1`.
    pub fn from_token(token: &str) -> Option<Label> {
        match token.trim() {
            "-1" => Some(Label::Negative),
            "1" | "+1" => Some(Label::Positive),
            _ => None,
        }
    }
}

impl From<Label> for i8 {
    fn from(label: Label) -> i8 {
        label.as_i8()
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(value: i8) -> std::result::Result<Self, Self::Error> {
        match value {
            -1 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(format!("label {other} is not -1 or 1")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

/// Counts of (negative, positive) labels.
pub fn class_counts(labels: &[Label]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&l| l == Label::Positive).count();
    (labels.len() - pos, pos)
}

/// An n x p real feature matrix with one ±1 label per row.
///
/// The matrix is shared behind an `Arc`, so relabeling for permutations
/// does not copy features.
#[derive(Clone, Debug)]
pub struct LabeledDataset {
    features: Arc<[f64]>,
    n_samples: usize,
    n_features: usize,
    labels: Vec<Label>,
    feature_names: Option<Arc<[String]>>,
}

impl PartialEq for LabeledDataset {
    fn eq(&self, other: &Self) -> bool {
        self.n_samples == other.n_samples
            && self.n_features == other.n_features
            && self.labels == other.labels
            && self.features[..] == other.features[..]
            && self.feature_names.as_deref() == other.feature_names.as_deref()
    }
}

impl LabeledDataset {
    /// Builds a dataset from a row-major feature buffer.
    pub fn new(features: Vec<f64>, n_features: usize, labels: Vec<Label>) -> Result<Self> {
        let n_samples = labels.len();
        if n_samples.checked_mul(n_features) != Some(features.len()) {
            return Err(DppError::DimensionMismatch {
                what: "feature buffer length",
                expected: n_samples * n_features,
                found: features.len(),
            });
        }
        validate(&features, n_samples, n_features, &labels)?;
        Ok(LabeledDataset {
            features: features.into(),
            n_samples,
            n_features,
            labels,
            feature_names: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        if rows.is_empty() {
            return Err(DppError::DatasetEmpty);
        }
        if rows.len() != labels.len() {
            return Err(DppError::DimensionMismatch {
                what: "label count",
                expected: rows.len(),
                found: labels.len(),
            });
        }
        let p = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(DppError::RaggedRows {
                    row: i + 1,
                    expected: p,
                    found: row.len(),
                });
            }
        }
        Self::new(rows.concat(), p, labels)
    }

    /// Attaches variable names; the list must have exactly p entries.
    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_features {
            return Err(DppError::DimensionMismatch {
                what: "feature name count",
                expected: self.n_features,
                found: names.len(),
            });
        }
        self.feature_names = Some(names.into());
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_features.max(1)).take(self.n_samples)
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Name of column `j` (0-based), defaulting to `V1`..`Vp`.
    pub fn feature_name(&self, j: usize) -> String {
        match &self.feature_names {
            Some(names) => names[j].clone(),
            None => format!("V{}", j + 1),
        }
    }

    /// (negative, positive) class sizes.
    pub fn class_counts(&self) -> (usize, usize) {
        class_counts(&self.labels)
    }

    /// Same features, new labels.
    pub fn relabeled(&self, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != self.n_samples {
            return Err(DppError::DimensionMismatch {
                what: "label count",
                expected: self.n_samples,
                found: labels.len(),
            });
        }
        let (neg, pos) = class_counts(&labels);
        if neg == 0 || pos == 0 {
            return Err(DppError::SingleClass);
        }
        Ok(LabeledDataset { labels, ..self.clone() })
    }

    /// Row-sliced copy. Indices are 0-based, must be in range and distinct.
    pub fn subset_rows(&self, rows: &[usize]) -> Result<Self> {
        let mut seen = HashSet::with_capacity(rows.len());
        for &r in rows {
            if r >= self.n_samples {
                return Err(DppError::Index {
                    index: r,
                    limit: self.n_samples,
                });
            }
            if !seen.insert(r) {
                return Err(DppError::DuplicateIndex(r));
            }
        }
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        for &r in rows {
            features.extend_from_slice(self.row(r));
        }
        let labels: Vec<Label> = rows.iter().map(|&r| self.labels[r]).collect();
        let mut out = Self::new(features, self.n_features, labels)?;
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }

    /// Subset to the first `count` rows.
    pub fn head(&self, count: usize) -> Result<Self> {
        let rows: Vec<usize> = (0..count).collect();
        self.subset_rows(&rows)
    }
}

fn validate(features: &[f64], n: usize, p: usize, labels: &[Label]) -> Result<()> {
    if n == 0 {
        return Err(DppError::DatasetEmpty);
    }
    if p == 0 {
        return Err(DppError::invalid("features", "dataset has no feature columns"));
    }
    if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
        return Err(DppError::NonFinite {
            row: pos / p + 1,
            col: pos % p + 1,
        });
    }
    let (neg, pos) = class_counts(labels);
    if neg == 0 || pos == 0 {
        return Err(DppError::SingleClass);
    }
    if n < MIN_SAMPLES {
        return Err(DppError::TooFewSamples {
            found: n,
            required: MIN_SAMPLES,
        });
    }
    Ok(())
}

/// Which column of a dense file holds the labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    /// 0-based column position.
    Index(usize),
    /// Header name; requires a header row.
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

#[derive(Clone, Debug, Default)]
pub struct DenseOptions {
    pub has_header: bool,
    pub label_column: Option<LabelColumn>,
}

/// Parsed file contents before dataset validation.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedData {
    pub rows: Vec<Vec<f64>>,
    pub labels: Option<Vec<Label>>,
    pub feature_names: Option<Vec<String>>,
}

impl ParsedData {
    /// Validates into a dataset, using `labels` when the file carried none.
    pub fn into_dataset(self, labels: Option<Vec<Label>>) -> Result<LabeledDataset> {
        let labels = match (self.labels, labels) {
            (_, Some(l)) | (Some(l), None) => l,
            (None, None) => return Err(DppError::MissingLabels),
        };
        let ds = LabeledDataset::from_rows(&self.rows, labels)?;
        match self.feature_names {
            Some(names) => ds.with_feature_names(names),
            None => Ok(ds),
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| DppError::io(path, e))
}

fn label_token(row: usize, token: &str) -> Result<Label> {
    Label::from_token(token).ok_or_else(|| DppError::LabelDomain {
        row,
        value: token.trim().to_string(),
    })
}

/// Parses comma-separated dense data. Row numbers in errors are 1-based file
/// lines (the header counts as line 1).
pub fn parse_dense<R: Read>(reader: R, opts: &DenseOptions) -> Result<ParsedData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let mut header: Option<Vec<String>> = None;
    let mut line = 0usize;
    if opts.has_header {
        line += 1;
        match records.next() {
            Some(rec) => {
                let rec = rec.map_err(|e| csv_error(line, e))?;
                header = Some(rec.iter().map(str::to_string).collect());
            }
            None => return Err(DppError::DatasetEmpty),
        }
    }

    let label_idx = match &opts.label_column {
        None => None,
        Some(LabelColumn::Index(i)) => Some(*i),
        Some(LabelColumn::Name(name)) => {
            let Some(h) = &header else {
                return Err(DppError::invalid(
                    "label column",
                    format!("column name {name:?} given but the file has no header"),
                ));
            };
            Some(
                h.iter()
                    .position(|c| c == name)
                    .ok_or_else(|| DppError::invalid("label column", format!("no column named {name:?}")))?,
            )
        }
    };

    let mut width = header.as_ref().map(Vec::len);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for rec in records {
        line += 1;
        let rec = rec.map_err(|e| csv_error(line, e))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(DppError::RaggedRows {
                row: line,
                expected,
                found: rec.len(),
            });
        }
        if let Some(li) = label_idx {
            if li >= expected {
                return Err(DppError::Index {
                    index: li,
                    limit: expected,
                });
            }
        }
        let mut row = Vec::with_capacity(expected);
        for (col, cell) in rec.iter().enumerate() {
            if Some(col) == label_idx {
                labels.push(label_token(line, cell)?);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| DppError::Parse {
                row: line,
                col: col + 1,
                message: format!("{cell:?} is not a real number"),
            })?;
            if !v.is_finite() {
                return Err(DppError::NonFinite {
                    row: line,
                    col: col + 1,
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DppError::DatasetEmpty);
    }

    let feature_names = header.map(|h| {
        h.into_iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, name)| name)
            .collect()
    });
    Ok(ParsedData {
        rows,
        labels: label_idx.map(|_| labels),
        feature_names,
    })
}

fn csv_error(line: usize, e: csv::Error) -> DppError {
    DppError::Parse {
        row: line,
        col: 0,
        message: e.to_string(),
    }
}

/// Loads a dense CSV file. Labels come from `opts.label_column` or, when
/// that is absent, from the labels-only file at `labels_path`.
pub fn load_dense(path: &Path, opts: &DenseOptions, labels_path: Option<&Path>) -> Result<LabeledDataset> {
    let parsed = parse_dense(BufReader::new(open(path)?), opts)?;
    let labels = match (&parsed.labels, labels_path) {
        (None, Some(lp)) => {
            let labels = load_labels(lp)?;
            if labels.len() != parsed.rows.len() {
                return Err(DppError::DimensionMismatch {
                    what: "label count",
                    expected: parsed.rows.len(),
                    found: labels.len(),
                });
            }
            Some(labels)
        }
        _ => None,
    };
    parsed.into_dataset(labels)
}

/// Parses the sparse `<label> <index>:<value>` format.
pub fn parse_sparse<R: BufRead>(reader: R) -> Result<ParsedData> {
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut p = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let row = i + 1;
        let line = line.map_err(|e| DppError::Parse {
            row,
            col: 0,
            message: e.to_string(),
        })?;
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else { continue };
        labels.push(label_token(row, first)?);
        let mut previous = 0usize;
        let mut sample = Vec::new();
        for (t, tok) in tokens.enumerate() {
            let col = t + 2;
            let parse_err = |message: String| DppError::Parse { row, col, message };
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(format!("{tok:?} is not index:value")))?;
            let idx: usize = idx.parse().map_err(|_| parse_err(format!("bad index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_err("indices are 1-based".into()));
            }
            let val: f64 = val.parse().map_err(|_| parse_err(format!("bad value {val:?}")))?;
            if !val.is_finite() {
                return Err(DppError::NonFinite { row, col });
            }
            if idx <= previous {
                return Err(DppError::NonMonotoneIndex {
                    row,
                    index: idx,
                    previous,
                });
            }
            previous = idx;
            p = p.max(idx);
            sample.push((idx - 1, val));
        }
        entries.push(sample);
    }
    if entries.is_empty() {
        return Err(DppError::DatasetEmpty);
    }
    let rows = entries
        .into_iter()
        .map(|sample| {
            let mut row = vec![0.0; p];
            for (j, v) in sample {
                row[j] = v;
            }
            row
        })
        .collect();
    Ok(ParsedData {
        rows,
        labels: Some(labels),
        feature_names: None,
    })
}

/// Loads a sparse file; p is the largest index seen.
pub fn load_sparse(path: &Path) -> Result<LabeledDataset> {
    parse_sparse(BufReader::new(open(path)?))?.into_dataset(None)
}

/// Reads a labels-only file.
pub fn load_labels(path: &Path) -> Result<Vec<Label>> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| DppError::io(path, e))?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            labels.push(label_token(i + 1, tok)?);
        }
    }
    if labels.is_empty() {
        return Err(DppError::DatasetEmpty);
    }
    Ok(labels)
}

/// Reads a names sidecar: one variable name per non-empty line.
pub fn load_names(path: &Path) -> Result<Vec<String>> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| DppError::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

/// Column name used for labels by [`write_dense`].
pub const LABEL_HEADER: &str = "label";

/// Writes a dense CSV with a header row and a trailing `label` column.
pub fn write_dense(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| DppError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| DppError::io(path, e);
    let header: Vec<String> = (0..ds.n_features()).map(|j| ds.feature_name(j)).collect();
    writeln!(out, "{},{LABEL_HEADER}", header.join(",")).map_err(io)?;
    for (row, label) in ds.rows().zip(ds.labels()) {
        for v in row {
            write!(out, "{v},").map_err(io)?;
        }
        writeln!(out, "{label}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Writes the sparse format, omitting zero entries.
pub fn write_sparse(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| DppError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| DppError::io(path, e);
    for (row, label) in ds.rows().zip(ds.labels()) {
        write!(out, "{label}").map_err(io)?;
        for (j, v) in row.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            write!(out, " {}:{v}", j + 1).map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}
